#pragma once

#include "ncs/types.hpp"

namespace ncs {

// Correlated Rayleigh block fading with first-order autoregressive gain.
struct FadingChannel {
  double a_tilde = 5.0;  // continuous-time decorrelation rate
  double tau = 0.05;
  double B_W = 1.0;
  int rate_bits = 4;
  double a = 0.0;      // per-slot correlation coefficient
  double Z = 0.0;      // innovation variance, a^2 + Z = 1
  double kappa = 0.0;  // SNR gap of the modulation
};

double modulation_gap(int rate_bits);
FadingChannel make_channel(double a_tilde, double tau, double B_W, int rate_bits);

Complex stationary_gain(Rng& rng);
Complex step_channel(const FadingChannel& c, Complex h, Rng& rng);

// Symbol error probability at power p and fading power alpha.
double ser(const FadingChannel& c, double power, double alpha);
bool sample_outcome(const FadingChannel& c, double power, double alpha, Rng& rng);

}  // namespace ncs
