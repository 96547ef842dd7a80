#include "ncs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncs {

namespace {

constexpr double kInvE = 0.36787944117144233;

bool is_real(Complex z) { return z.imag() == 0.0; }

}  // namespace

ApproxValueFn::ApproxValueFn(const ValueFnParams& params) : p_(params) {
  if (!(p_.a_tilde > 0.0) || !(p_.p_max > 0.0) || !(p_.kappa > 0.0) || !(p_.B_W > 0.0))
    throw DomainError("ApproxValueFn: channel parameters must be positive");
  if (!(p_.eta_th > 0.0)) throw DomainError("ApproxValueFn: eta_th must be positive");
  if (p_.W.rows() != p_.F.rows() || p_.W.cols() != p_.F.cols())
    throw DimensionError("ApproxValueFn: disturbance intensity has wrong shape");

  eig_ = eigendecompose(p_.F);
  W_U_ = eig_.U * p_.W.cast<Complex>() * eig_.U.adjoint();
  c_tilde_ = std::sqrt(p_.a_tilde * p_.a_tilde + 4.0 * p_.a_tilde * p_.p_max / (p_.kappa * p_.B_W));

  const int d = static_cast<int>(eig_.mu.size());
  const auto& mu = eig_.mu;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (std::abs(mu[i] + mu[j]) == 0.0) throw DegenerateSpectrum("ApproxValueFn: eigenvalue pair sums to zero");

  lambert_ = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) lambert_(i, j) = pair_lambert(i, j);

  const double c = c_tilde_;
  auto log_abs = [](Complex z) {
    if (std::abs(z) == 0.0 || !std::isfinite(std::abs(z)))
      throw DegenerateSpectrum("ApproxValueFn: logarithm of a vanishing modal weight");
    return std::log(std::abs(z));
  };
  B2_ = 0.0;
  C2_ = 0.0;
  for (int i = 0; i < d; ++i) {
    B2_ += log_abs(W_U_(i, i) / (4.0 * mu[i]));
    C2_ += 2.0 * mu[i].real() / (-c);
    for (int j = i + 1; j < d; ++j) {
      B2_ += log_abs(W_U_(i, j) / (-4.0 * c * lambert_(i, j)));
      B2_ += log_abs(W_U_(i, j) / (-4.0 * c * lambert_(j, i)));
      C2_ += 2.0 * (lambert_(j, i) + lambert_(i, j)).real();
    }
  }
  C2_ -= 0.5 * d * d * (1.0 - p_.a_tilde / c);
}

Complex ApproxValueFn::pair_lambert(int i, int j) const {
  const Complex mi = eig_.mu[i], mj = eig_.mu[j];
  const Complex z = -mj / (2.0 * c_tilde_) * std::exp(-(mi + mj) / (2.0 * c_tilde_));
  if (is_real(mi) && is_real(mj)) {
    if (z.real() < -kInvE) throw DegenerateSpectrum("ApproxValueFn: Lambert argument below -1/e");
    return lambert_w0(z.real());
  }
  return lambert_w0(z);
}

Matrix ApproxValueFn::to_state_basis(const CMatrix& modal) const {
  const Matrix r = (eig_.U.adjoint() * modal * eig_.U).real();
  return 0.5 * (r + r.transpose());
}

Complex ApproxValueFn::a1_mode(int i, double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("ApproxValueFn: fading power must be positive");
  const double a = p_.a_tilde;
  const Complex m = eig_.mu[i];
  return std::exp(-m / (a * alpha) - (m / a) * (1.0 - 2.0 * m / a) * std::log(alpha));
}

namespace {

Complex pair_exponent(Complex s, double a, double alpha) {
  return -s / (2.0 * a * alpha) - (s / (2.0 * a)) * (1.0 - s / a) * std::log(alpha);
}

}  // namespace

Matrix ApproxValueFn::A1(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("ApproxValueFn: fading power must be positive");
  const int d = static_cast<int>(eig_.mu.size());
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) {
        m(i, i) = a1_mode(i, alpha);
      } else {
        const Complex s = eig_.mu[i] + eig_.mu[j];
        m(i, j) = eig_.mu[j] / s * std::exp(pair_exponent(s, p_.a_tilde, alpha));
      }
    }
  return to_state_basis(m);
}

double ApproxValueFn::b1(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("ApproxValueFn: fading power must be positive");
  const int d = static_cast<int>(eig_.mu.size());
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    sum += (W_U_(i, i) / (2.0 * eig_.mu[i]) * a1_mode(i, alpha)).real();
    for (int j = i + 1; j < d; ++j) {
      const Complex s = eig_.mu[i] + eig_.mu[j];
      sum += (W_U_(i, j) / s * std::exp(pair_exponent(s, p_.a_tilde, alpha))).real();
    }
  }
  return sum;
}

Matrix ApproxValueFn::A2(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("ApproxValueFn: fading power must be positive");
  const int d = static_cast<int>(eig_.mu.size());
  const double la = std::log(alpha);
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = i == j ? std::exp(-eig_.mu[i] / c_tilde_ * la) : std::exp(lambert_(i, j) * la);
  return to_state_basis(m);
}

double ApproxValueFn::value(const Vector& delta, double alpha) const {
  if (delta.size() != eig_.mu.size()) throw DimensionError("ApproxValueFn: error vector has wrong size");
  if (delta.squaredNorm() * alpha < p_.eta_th) return delta.dot(A1(alpha) * delta) + b1(alpha);
  const double a = p_.a_tilde, c = c_tilde_;
  const double inner = delta.dot(A2(alpha) * delta) + std::exp(2.0 * B2_) * std::pow(alpha, C2_);
  return inner * std::exp(-((a - c) / 4.0) * alpha) * std::pow(alpha, -(0.25 - a / (4.0 * c)));
}

double ApproxValueFn::threshold(const Vector& delta, double alpha) const {
  if (delta.size() != eig_.mu.size()) throw DimensionError("ApproxValueFn: error vector has wrong size");
  if (delta.isZero(0.0)) return 0.0;
  const double scale = alpha / (p_.kappa * p_.B_W);
  if (delta.squaredNorm() * alpha < p_.eta_th) {
    // b1 cancels exactly; evaluating the difference would give inf - inf in deep fades.
    const double q = delta.dot(A1(alpha) * delta);
    return std::isnan(q) ? std::numeric_limits<double>::infinity() : q * scale;
  }
  return (value(delta, alpha) - b1(alpha)) * scale;
}

PowerDecision decide_power(const ApproxValueFn& vf, const Vector& delta, double alpha_prev) {
  PowerDecision out;
  out.threshold = vf.threshold(delta, alpha_prev);
  out.p = vf.params().lambda <= out.threshold ? vf.params().p_max : 0.0;
  return out;
}

double fpc_power(double p0) {
  if (p0 < 0.0) throw DomainError("fpc_power: negative power");
  return p0;
}

double copc_power(double lambda, double a, double alpha_prev, double p_max) {
  if (!(alpha_prev > 0.0) || !(a > 0.0)) throw DomainError("copc_power: fading power and correlation must be positive");
  return std::min(lambda / (a * alpha_prev), p_max);
}

double instability_measure(const Matrix& F) {
  const CVector mu = Eigen::EigenSolver<Matrix>(F, false).eigenvalues();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) sum += std::max(0.0, std::log2(std::abs(mu[i])));
  return sum;
}

namespace {

StabilityCheck stability_terms(const Matrix& F, int rate_bits, double p_max, double tau, double kappa, double B_W) {
  if (rate_bits < 1 || !(p_max > 0.0) || !(tau > 0.0) || !(kappa > 0.0) || !(B_W > 0.0))
    throw DomainError("stability check: parameters must be positive");
  StabilityCheck c;
  c.lhs = p_max * tau / (kappa * B_W + p_max * tau);
  c.rate_term = instability_measure(F) / rate_bits;
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(F.transpose() * F).eigenvalues().maxCoeff();
  c.growth_term = 1.0 - 1.0 / top;
  return c;
}

}  // namespace

StabilityCheck check_sufficient(const Matrix& F, int rate_bits, double p_max, double tau, double kappa, double B_W) {
  StabilityCheck c = stability_terms(F, rate_bits, p_max, tau, kappa, B_W);
  c.margin = c.lhs - std::max(c.rate_term, c.growth_term);
  c.holds = c.margin > 0.0;
  return c;
}

StabilityCheck check_necessary(const Matrix& F, int rate_bits, double p_max, double tau, double kappa, double B_W) {
  StabilityCheck c = stability_terms(F, rate_bits, p_max, tau, kappa, B_W);
  c.margin = c.lhs - std::min(c.rate_term, c.growth_term);
  c.holds = c.margin > 0.0;
  return c;
}

}  // namespace ncs
