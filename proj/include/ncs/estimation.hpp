#pragma once

#include "ncs/plant.hpp"
#include "ncs/quantizer.hpp"

namespace ncs {

struct ControllerGain {
  Matrix K;
  Matrix P;
};

// Certainty-equivalent LQR gain for cost x'Qx + u'Du; requires ||F - GK|| < 1.
ControllerGain make_gain(const SampledPlant& p, const Matrix& Q, const Matrix& D);

Vector ce_control(const ControllerGain& g, const Vector& x_hat);

// Controller-side estimate: F x_hat + G u_prev on erasure, Psi^{-1} xi + x_shift on success.
Vector update_estimate(const Matrix& F, const Matrix& G, const Vector& x_hat_prev, const Vector& u_prev,
                       bool success, const Vector& xi, const QuantizerState& q);

// Estimation error recursion; it never involves the control input.
Vector step_delta(const Matrix& F, const Vector& delta_prev, const Vector& w_prev, bool success, const Vector& e,
                  const Matrix& Psi);

}  // namespace ncs
