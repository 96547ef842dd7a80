#pragma once

#include "ncs/types.hpp"

namespace ncs {

struct ContinuousPlant {
  Matrix F;        // drift
  Matrix G;        // input matrix
  Matrix W;        // disturbance intensity, diagonal PSD
  double w_max = 1.0;
  Vector x0;
};

struct SampledPlant {
  Matrix F;
  Matrix G;
  Matrix W;                   // per-slot disturbance covariance
  double w_max_nominal = 0.0; // bound propagated from the continuous-time bound
  double w_max = 0.0;         // bound actually enforced on sampled disturbances
  double tau = 0.0;
  double inflation = 1.0;     // variance multiplier applied before truncation
  Matrix noise_factor;        // square root of W
};

// Disturbances are truncated at max(nominal bound, kDisturbanceSigmas * sqrt(trace W)).
inline constexpr double kDisturbanceSigmas = 3.0;

SampledPlant discretize(const ContinuousPlant& p, double tau);

// Sets the enforced disturbance bound and the matching sampler parameters.
void set_disturbance_bound(SampledPlant& p, double bound);

struct Whitening {
  Matrix M;  // orthogonal, M W M' diagonal with eigenvalues in descending order
  Matrix T;
  ContinuousPlant plant;
};

Whitening whiten(const ContinuousPlant& p);

// Variance multiplier c such that N(0, c W) truncated to |w| <= bound has trace(W) total variance.
double truncation_inflation(const Matrix& W, double bound);

Vector sample_disturbance(const SampledPlant& p, Rng& rng);
Vector step_plant(const SampledPlant& p, const Vector& x, const Vector& u, const Vector& w);

}  // namespace ncs
