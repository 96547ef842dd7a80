#pragma once

#include "ncs/numerics.hpp"

namespace ncs {

struct ValueFnParams {
  Matrix F;  // continuous-time drift
  Matrix W;  // continuous-time disturbance intensity
  double a_tilde = 5.0;
  double p_max = 160.0;
  double kappa = 10.0;
  double B_W = 1.0;
  double lambda = 1.0;
  double eta_th = 0.68;
};

// Two-branch closed-form approximation of the relative value function over
// (estimation error, fading power). Immutable after construction.
class ApproxValueFn {
 public:
  explicit ApproxValueFn(const ValueFnParams& params);

  Matrix A1(double alpha) const;
  double b1(double alpha) const;
  Matrix A2(double alpha) const;
  double B2() const { return B2_; }
  double C2() const { return C2_; }
  double c_tilde() const { return c_tilde_; }
  const ValueFnParams& params() const { return p_; }
  const EigenDecomposition& eig() const { return eig_; }

  // Diagonal entry a_{1,ii} in the modal basis (complex for complex modes).
  Complex a1_mode(int i, double alpha) const;

  double value(const Vector& delta, double alpha) const;
  double threshold(const Vector& delta, double alpha) const;

 private:
  Complex pair_lambert(int i, int j) const;
  Matrix to_state_basis(const CMatrix& modal) const;

  ValueFnParams p_;
  EigenDecomposition eig_;
  CMatrix W_U_;
  double c_tilde_ = 0.0;
  double B2_ = 0.0;
  double C2_ = 0.0;
  CMatrix lambert_;  // lambert_(i, j) = W0(-mu_j / (2c) exp(-(mu_i + mu_j) / (2c)))
};

struct PowerDecision {
  double p = 0.0;
  double threshold = 0.0;
};

PowerDecision decide_power(const ApproxValueFn& vf, const Vector& delta, double alpha_prev);

double fpc_power(double p0);
double copc_power(double lambda, double a, double alpha_prev, double p_max);

// Sum of positive log2 eigenvalue magnitudes.
double instability_measure(const Matrix& F);

struct StabilityCheck {
  bool holds = false;
  double margin = 0.0;
  double lhs = 0.0;
  double rate_term = 0.0;
  double growth_term = 0.0;
};

StabilityCheck check_sufficient(const Matrix& F, int rate_bits, double p_max, double tau, double kappa, double B_W);
StabilityCheck check_necessary(const Matrix& F, int rate_bits, double p_max, double tau, double kappa, double B_W);

}  // namespace ncs
