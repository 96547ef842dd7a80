#include "ncs/estimation.hpp"

#include "ncs/numerics.hpp"

namespace ncs {

ControllerGain make_gain(const SampledPlant& p, const Matrix& Q, const Matrix& D) {
  ControllerGain g;
  g.P = solve_dare(p.F, p.G, D, Q);
  const Matrix S = p.G.transpose() * g.P * p.G + D;
  g.K = S.ldlt().solve(p.G.transpose() * g.P * p.F);
  if (spectral_norm(Matrix(p.F - p.G * g.K)) >= 1.0)
    throw GainUnstable("make_gain: closed loop is not a contraction");
  return g;
}

Vector ce_control(const ControllerGain& g, const Vector& x_hat) { return -(g.K * x_hat); }

Vector update_estimate(const Matrix& F, const Matrix& G, const Vector& x_hat_prev, const Vector& u_prev,
                       bool success, const Vector& xi, const QuantizerState& q) {
  if (success) return q.Psi.partialPivLu().solve(xi) + q.x_shift;
  return F * x_hat_prev + G * u_prev;
}

Vector step_delta(const Matrix& F, const Vector& delta_prev, const Vector& w_prev, bool success, const Vector& e,
                  const Matrix& Psi) {
  if (success) return -Psi.partialPivLu().solve(e);
  return F * delta_prev + w_prev;
}

}  // namespace ncs
