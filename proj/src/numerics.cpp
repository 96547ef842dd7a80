#include "ncs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/lambert_w.hpp>

namespace ncs {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

namespace {

void require_square(const Matrix& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DimensionError(std::string(who) + ": matrix must be square and non-empty");
}

bool all_finite(const Matrix& A) { return A.allFinite(); }

}  // namespace

Matrix matrix_exponential(const Matrix& A, double t) {
  require_square(A, "matrix_exponential");
  if (!all_finite(A) || !std::isfinite(t)) throw DomainError("matrix_exponential: non-finite input");
  const Eigen::Index n = A.rows();
  Matrix B = A * t;
  const double norm = B.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  B /= std::ldexp(1.0, squarings);

  // ||B|| <= 1/2, so 18 terms leave a remainder below 1e-22.
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 18; ++k) {
    term = term * B / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

EigenDecomposition eigendecompose(const Matrix& A) {
  require_square(A, "eigendecompose");
  if (!all_finite(A)) throw DomainError("eigendecompose: non-finite input");
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Matrix> solver(A, true);
  if (solver.info() != Eigen::Success) throw NonDiagonalizable("eigendecompose: eigen solver failed");

  CVector values = solver.eigenvalues();
  CMatrix vectors = solver.eigenvectors();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values[a].real() != values[b].real()) return values[a].real() < values[b].real();
    return values[a].imag() < values[b].imag();
  });

  EigenDecomposition out;
  out.mu.resize(n);
  out.U_inv.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.mu[k] = values[order[k]];
    out.U_inv.col(k) = vectors.col(order[k]).normalized();
  }
  Eigen::JacobiSVD<CMatrix> svd(out.U_inv);
  const auto& s = svd.singularValues();
  if (s(n - 1) <= 0.0 || s(0) / s(n - 1) > 1e8)
    throw NonDiagonalizable("eigendecompose: eigenvector matrix is ill-conditioned");
  out.U = out.U_inv.inverse();
  return out;
}

Matrix solve_dare(const Matrix& F, const Matrix& G, const Matrix& D, const Matrix& Qs, double tol,
                  int max_iter) {
  require_square(F, "solve_dare");
  const Eigen::Index n = F.rows();
  if (G.rows() != n || D.rows() != G.cols() || D.cols() != G.cols() || Qs.rows() != n || Qs.cols() != n)
    throw DimensionError("solve_dare: inconsistent dimensions");
  if (!all_finite(F) || !all_finite(G) || !all_finite(D) || !all_finite(Qs))
    throw DomainError("solve_dare: non-finite input");

  Matrix P = Qs;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix PG = P * G;
    const Matrix S = G.transpose() * PG + D;
    const Matrix gain = S.ldlt().solve(PG.transpose() * F);
    Matrix next = F.transpose() * P * F - F.transpose() * PG * gain + Qs;
    next = 0.5 * (next + next.transpose());
    if (!all_finite(next)) break;
    const double change = (next - P).norm();
    P = std::move(next);
    if (change <= tol * (1.0 + P.norm())) return P;
  }
  throw NoConvergence("solve_dare: Riccati iteration did not converge");
}

double lambert_w0(double x) {
  constexpr double kBranch = -0.36787944117144233;  // -1/e
  if (std::isnan(x) || x < kBranch) throw DomainError("lambert_w0: argument below -1/e");
  if (x == kBranch) return -1.0;
  if (std::isinf(x)) return x;
  return boost::math::lambert_w0(x);
}

Complex lambert_w0(Complex z) {
  if (z.imag() == 0.0 && z.real() >= -0.36787944117144233) return lambert_w0(z.real());
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("lambert_w0: non-finite argument");

  Complex w;
  const Complex p = std::sqrt(2.0 * (std::exp(1.0) * z + 1.0));
  if (std::abs(p) < 0.5)
    w = -1.0 + p - p * p / 3.0;
  else if (std::abs(z) < 3.0)
    w = std::log(1.0 + z);
  else
    w = std::log(z) - std::log(std::log(z));
  for (int it = 0; it < 200; ++it) {
    const Complex ew = std::exp(w);
    const Complex f = w * ew - z;
    const Complex wp1 = w + 1.0;
    if (std::abs(wp1) == 0.0) break;
    const Complex step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return w;
}

Matrix noise_covariance(const Matrix& A, const Matrix& Wc, double tau) {
  require_square(A, "noise_covariance");
  const Eigen::Index n = A.rows();
  if (Wc.rows() != n || Wc.cols() != n) throw DimensionError("noise_covariance: W has wrong shape");
  if (tau < 0.0) throw DomainError("noise_covariance: negative interval");
  Matrix C = Matrix::Zero(2 * n, 2 * n);
  C.topLeftCorner(n, n) = -A;
  C.topRightCorner(n, n) = Wc;
  C.bottomRightCorner(n, n) = A.transpose();
  const Matrix E = matrix_exponential(C, tau);
  Matrix W = E.bottomRightCorner(n, n).transpose() * E.topRightCorner(n, n);
  return 0.5 * (W + W.transpose());
}

double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() == 1 || A.cols() == 1) return A.norm();
  return Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
}

double spectral_norm(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(A).singularValues()(0);
}

}  // namespace ncs
