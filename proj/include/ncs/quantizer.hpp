#pragma once

#include <vector>

#include "ncs/types.hpp"

namespace ncs {

// Real block-diagonal form Phi F Phi^{-1} = Upsilon. Real eigenvalues give 1x1 blocks,
// complex pairs rho e^{+-i theta} give rho * [[cos, sin], [-sin, cos]].
struct QuantizerStructure {
  Matrix Phi;
  Matrix Phi_inv;
  Matrix Upsilon;
  Matrix H;        // per-slot rotation undoing the block rotations
  Vector Gamma;    // per-coordinate growth factor |mu|
  Vector modulus;  // per-coordinate eigenvalue modulus, same as Gamma
};

QuantizerStructure build_structure(const Matrix& F);

// Integer bits per coordinate, each >= 1, summing to total_bits, with
// p_succ * R_n > max(0, log2 |mu_n|).
std::vector<int> allocate_rates(const Matrix& F, int total_bits, double p_succ);
std::vector<int> allocate_rates(const Vector& modulus, int total_bits, double p_succ);

struct QuantizerState {
  Vector x_shift;  // prediction shared by sensor and controller
  Matrix Psi;
  Vector L;        // per-coordinate range
};

struct QuantizeResult {
  Vector xi;       // transmitted cell centroid
  Vector e;        // xi - Psi (x - x_shift)
  bool overflow = false;
};

QuantizerState init_state(const QuantizerStructure& s, double L0);

void update_shift(QuantizerState& q, const Matrix& F, const Matrix& G, bool success, const Vector& xi,
                  const Vector& u);
void update_range(QuantizerState& q, const QuantizerStructure& s, const std::vector<int>& rates, bool success,
                  double w_max);

QuantizeResult quantize(const QuantizerState& q, const std::vector<int>& rates, const Vector& x);
// Same as quantize with the innovation x - x_shift supplied directly.
QuantizeResult quantize_innovation(const QuantizerState& q, const std::vector<int>& rates, const Vector& innovation);

// Uniform scalar quantizer on [-range, range] with 2^bits cells; returns the cell centroid.
double quantize_scalar(double v, double range, int bits);

}  // namespace ncs
