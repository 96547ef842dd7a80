#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Plain Taylor series of exp(A t) in long double, no scaling.
inline Eigen::MatrixXd expm_series(const Eigen::MatrixXd& A, double t, int terms = 60) {
  const LMatrix M = A.cast<long double>() * static_cast<long double>(t);
  LMatrix term = LMatrix::Identity(A.rows(), A.cols());
  LMatrix sum = term;
  for (int k = 1; k < terms; ++k) {
    term = term * M / static_cast<long double>(k);
    sum += term;
  }
  return sum.cast<double>();
}

// Composite Simpson rule for the integral of exp(A s) W exp(A' s) over [0, tau].
inline Eigen::MatrixXd noise_cov_simpson(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, double tau,
                                         int panels = 2000) {
  const double h = tau / panels;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (int k = 0; k <= panels; ++k) {
    const Eigen::MatrixXd E = expm_series(A, k * h);
    const double wgt = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += wgt * E * W * E.transpose();
  }
  return sum * h / 3.0;
}

// Principal Lambert branch by bisection on w e^w = x, x >= -1/e.
inline double lambert_bisect(double x) {
  double lo = -1.0, hi = std::max(1.0, std::log1p(std::max(x, 0.0)) + 1.0);
  for (int k = 0; k < 400; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Scalar DARE p = f^2 p - f^2 g^2 p^2 / (g^2 p + d) + q, positive root.
inline double scalar_dare(double f, double g, double d, double q) {
  // g^2 p^2 + (d - f^2 d - q g^2) p - q d = 0
  const double A = g * g, B = d - f * f * d - q * g * g, C = -q * d;
  return (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
}

inline double dare_residual(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, const Eigen::MatrixXd& D,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd rhs =
      F.transpose() * P * F -
      F.transpose() * P * G * (G.transpose() * P * G + D).inverse() * G.transpose() * P * F + Q;
  return (P - rhs).norm();
}

// Simple deterministic generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double normal() { return std::normal_distribution<double>()(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  Eigen::MatrixXd matrix(int r, int c, double scale = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = scale * normal();
    return m;
  }
  Eigen::MatrixXd spd(int n, double floor = 0.1) {
    const Eigen::MatrixXd m = matrix(n, n);
    return m * m.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
  }
};

}  // namespace oracle
