#pragma once

#include "ncs/types.hpp"

namespace ncs {

// exp(A t) by scaling and squaring with a truncated Taylor series.
Matrix matrix_exponential(const Matrix& A, double t);

// A = U^{-1} diag(mu) U, with eigenvalues sorted by (real, imag).
// Columns of U^{-1} are unit-norm right eigenvectors.
struct EigenDecomposition {
  CMatrix U;
  CVector mu;
  CMatrix U_inv;
};

EigenDecomposition eigendecompose(const Matrix& A);

// Fixed-point Riccati iteration for
//   P = F'PF - F'PG (G'PG + D)^{-1} G'PF + Qs,
// started from P = Qs.
Matrix solve_dare(const Matrix& F, const Matrix& G, const Matrix& D, const Matrix& Qs,
                  double tol = 1e-12, int max_iter = 100000);

// Principal branch of the Lambert W function.
double lambert_w0(double x);
Complex lambert_w0(Complex z);

// Integral of exp(A s) Wc exp(A' s) over [0, tau] (Van Loan block exponential).
Matrix noise_covariance(const Matrix& A, const Matrix& Wc, double tau);

double spectral_norm(const Matrix& A);
double spectral_norm(const CMatrix& A);

}  // namespace ncs
