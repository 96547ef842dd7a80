#include "ncs/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncs/numerics.hpp"

namespace ncs {

QuantizerStructure build_structure(const Matrix& F) {
  const EigenDecomposition eig = eigendecompose(F);
  const Eigen::Index n = F.rows();
  Matrix V(n, n);
  Matrix H = Matrix::Zero(n, n);
  Vector gamma(n);
  for (Eigen::Index k = 0; k < n;) {
    const Complex mu = eig.mu[k];
    CVector v = eig.U_inv.col(k);
    const double tol = 1e-12 * (1.0 + std::abs(mu));
    if (std::abs(mu.imag()) <= tol) {
      Eigen::Index arg;
      v.cwiseAbs().maxCoeff(&arg);
      v *= std::conj(v(arg)) / std::abs(v(arg));
      V.col(k) = v.real().normalized();
      H(k, k) = 1.0;
      gamma(k) = std::abs(mu.real());
      k += 1;
      continue;
    }
    // The sort places the conjugate with negative imaginary part first.
    if (k + 1 >= n) throw NonDiagonalizable("build_structure: unpaired complex eigenvalue");
    const Complex upper = eig.mu[k + 1];
    const CVector w = eig.U_inv.col(k + 1);
    const double rho = std::abs(upper);
    const double theta = std::arg(upper);
    V.col(k) = w.real();
    V.col(k + 1) = w.imag();
    H.block(k, k, 2, 2) << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    gamma(k) = gamma(k + 1) = rho;
    k += 2;
  }
  QuantizerStructure s;
  s.Phi = V.inverse();
  s.Phi_inv = V;
  s.Upsilon = s.Phi * F * V;
  s.H = H;
  s.Gamma = gamma;
  s.modulus = gamma;
  return s;
}

std::vector<int> allocate_rates(const Matrix& F, int total_bits, double p_succ) {
  return allocate_rates(build_structure(F).modulus, total_bits, p_succ);
}

std::vector<int> allocate_rates(const Vector& modulus, int total_bits, double p_succ) {
  const int n = static_cast<int>(modulus.size());
  if (n == 0) throw DimensionError("allocate_rates: empty mode list");
  if (!(p_succ > 0.0)) throw InfeasibleRates(0, "allocate_rates: success probability must be positive");

  std::vector<int> rates(n, 1);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return modulus(a) > modulus(b); });

  int used = 0;
  for (int i : order) {
    const double need = std::max(0.0, std::log2(modulus(i)));
    int r = 1;
    while (p_succ * r <= need) ++r;
    rates[i] = r;
    used += r;
    if (used > total_bits)
      throw InfeasibleRates(i, "allocate_rates: bit budget cannot stabilise mode " + std::to_string(i));
  }

  std::vector<int> receivers;
  for (int i : order)
    if (modulus(i) > 1.0) receivers.push_back(i);
  if (receivers.empty()) receivers = order;
  // Spare bits go round-robin, largest modulus first.
  for (int k = 0; used < total_bits; ++k, ++used) rates[receivers[k % receivers.size()]] += 1;
  return rates;
}

QuantizerState init_state(const QuantizerStructure& s, double L0) {
  if (L0 < 0.0) throw DomainError("init_state: negative initial range");
  const Eigen::Index n = s.Phi.rows();
  QuantizerState q;
  q.x_shift = Vector::Zero(n);
  q.Psi = s.Phi;
  q.L = Vector::Constant(n, spectral_norm(s.Phi) * L0);
  return q;
}

void update_shift(QuantizerState& q, const Matrix& F, const Matrix& G, bool success, const Vector& xi,
                  const Vector& u) {
  if (success)
    q.x_shift = F * (q.Psi.partialPivLu().solve(xi) + q.x_shift) + G * u;
  else
    q.x_shift = F * q.x_shift + G * u;
}

void update_range(QuantizerState& q, const QuantizerStructure& s, const std::vector<int>& rates, bool success,
                  double w_max) {
  q.Psi = s.H * q.Psi;
  const double spread = w_max * spectral_norm(q.Psi);
  for (Eigen::Index n = 0; n < q.L.size(); ++n) {
    const double shrink = success ? std::ldexp(1.0, -rates[n]) : 1.0;
    q.L(n) = s.Gamma(n) * shrink * q.L(n) + spread;
  }
}

double quantize_scalar(double v, double range, int bits) {
  if (range <= 0.0) return 0.0;
  const long cells = 1L << bits;
  const double width = 2.0 * range / static_cast<double>(cells);
  long k = static_cast<long>(std::floor((v + range) / width));
  k = std::clamp(k, 0L, cells - 1);
  return -range + (static_cast<double>(k) + 0.5) * width;
}

QuantizeResult quantize_innovation(const QuantizerState& q, const std::vector<int>& rates, const Vector& innovation) {
  const Vector v = q.Psi * innovation;
  QuantizeResult r;
  r.xi = Vector::Zero(v.size());
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    if (!(std::abs(v(n)) <= q.L(n))) {
      r.overflow = true;
      continue;
    }
    r.xi(n) = quantize_scalar(v(n), q.L(n), rates[n]);
  }
  r.e = r.xi - v;
  return r;
}

QuantizeResult quantize(const QuantizerState& q, const std::vector<int>& rates, const Vector& x) {
  return quantize_innovation(q, rates, x - q.x_shift);
}

}  // namespace ncs
