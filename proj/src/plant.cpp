#include "ncs/plant.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ncs/numerics.hpp"

namespace ncs {

namespace {

Matrix psd_sqrt(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (W + W.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Composite Simpson weights on n panels (n even) over [0, h*n].
std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& v : w) v *= h / 3.0;
  return w;
}

}  // namespace

SampledPlant discretize(const ContinuousPlant& p, double tau) {
  const Eigen::Index n = p.F.rows();
  if (p.F.cols() != n || p.G.rows() != n || p.W.rows() != n || p.W.cols() != n)
    throw DimensionError("discretize: inconsistent plant dimensions");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("discretize: sampling interval must be positive");
  if (!p.F.allFinite() || !p.G.allFinite() || !p.W.allFinite())
    throw DomainError("discretize: non-finite plant matrices");
  if (p.w_max < 0.0) throw DomainError("discretize: negative disturbance bound");
  if (!p.W.isApprox(p.W.transpose()) || p.W.diagonal().minCoeff() < 0.0)
    throw DomainError("discretize: disturbance intensity must be symmetric PSD");

  const Eigen::Index m = p.G.cols();
  // exp([[F, G], [0, 0]] tau) = [[exp(F tau), int_0^tau exp(F s) ds G], [0, I]]
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = p.F;
  aug.topRightCorner(n, m) = p.G;
  const Matrix E = matrix_exponential(aug, tau);

  SampledPlant s;
  s.tau = tau;
  s.F = E.topLeftCorner(n, n);
  s.G = E.topRightCorner(n, m);
  s.W = noise_covariance(p.F, p.W, tau);

  const Eigen::VectorXcd mu = Eigen::EigenSolver<Matrix>(p.F, false).eigenvalues();
  double growth = mu.real().maxCoeff();
  const int panels = 256;
  const double h = tau / panels;
  const auto wts = simpson_weights(panels, h);
  double integral = 0.0;
  for (int i = 0; i <= panels; ++i)
    for (int j = 0; j <= panels; ++j) integral += wts[i] * wts[j] * std::exp(growth * h * (i + j));
  s.w_max_nominal = p.w_max * std::sqrt(integral);

  set_disturbance_bound(s, std::max(s.w_max_nominal, kDisturbanceSigmas * std::sqrt(s.W.trace())));
  return s;
}

void set_disturbance_bound(SampledPlant& p, double bound) {
  if (bound < 0.0) throw DomainError("set_disturbance_bound: negative bound");
  p.w_max = bound;
  p.noise_factor = psd_sqrt(p.W);
  p.inflation = truncation_inflation(p.W, bound);
}

Whitening whiten(const ContinuousPlant& p) {
  const Eigen::Index n = p.W.rows();
  Whitening out;
  const Matrix off = p.W - Matrix(p.W.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    out.M = Matrix::Identity(n, n);
    out.T = p.W;
    out.plant = p;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p.W + p.W.transpose()));
  Matrix M(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector v = es.eigenvectors().col(n - 1 - k);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    M.row(k) = v.transpose();
  }
  out.M = M;
  out.T = Matrix(es.eigenvalues().reverse().asDiagonal());
  out.plant.F = M * p.F * M.transpose();
  out.plant.G = M * p.G;
  out.plant.W = out.T;
  out.plant.w_max = p.w_max;
  out.plant.x0 = p.x0.size() == n ? Vector(M * p.x0) : p.x0;
  return out;
}

double truncation_inflation(const Matrix& W, double bound) {
  const Eigen::Index n = W.rows();
  if (W.trace() <= 0.0) return 1.0;
  if (!(bound > 0.0)) throw DomainError("truncation_inflation: bound must be positive");
  const Matrix L = psd_sqrt(W);
  Rng rng = make_rng(0x5eed, 17);
  std::normal_distribution<double> normal;
  constexpr int kSamples = 1 << 16;
  std::vector<double> q(kSamples);
  Vector z(n);
  double total = 0.0;
  for (auto& v : q) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    v = (L * z).squaredNorm();
    total += v;
  }
  std::sort(q.begin(), q.end());
  std::vector<double> prefix(kSamples + 1, 0.0);
  for (int i = 0; i < kSamples; ++i) prefix[i + 1] = prefix[i] + q[i];
  const double mean = total / kSamples;
  const double b2 = bound * bound;
  // Retained variance of the truncated law relative to W.
  auto ratio = [&](double c) {
    const auto kept = std::upper_bound(q.begin(), q.end(), b2 / c) - q.begin();
    if (kept == 0) return 0.0;
    return c * prefix[kept] / kept / mean;
  };
  if (ratio(1.0) >= 1.0 - 1e-6) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (ratio(hi) < 1.0) {
    hi *= 2.0;
    if (hi > 1e4) throw DomainError("truncation_inflation: covariance unreachable under the disturbance bound");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vector sample_disturbance(const SampledPlant& p, Rng& rng) {
  const Eigen::Index n = p.W.rows();
  std::normal_distribution<double> normal;
  const double scale = std::sqrt(p.inflation);
  Vector z(n), w(n);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    w.noalias() = scale * (p.noise_factor * z);
    if (w.norm() <= p.w_max) return w;
  }
  return Vector::Zero(n);
}

Vector step_plant(const SampledPlant& p, const Vector& x, const Vector& u, const Vector& w) {
  return p.F * x + p.G * u + w;
}

}  // namespace ncs
