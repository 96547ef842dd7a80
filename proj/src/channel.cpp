#include "ncs/channel.hpp"

#include <cmath>

namespace ncs {

double modulation_gap(int rate_bits) {
  if (rate_bits < 1) throw DomainError("modulation_gap: rate must be at least one bit");
  return (std::ldexp(1.0, rate_bits + 1) - 2.0) / 3.0;
}

FadingChannel make_channel(double a_tilde, double tau, double B_W, int rate_bits) {
  if (!(a_tilde > 0.0) || !(tau > 0.0) || !(B_W > 0.0))
    throw DomainError("make_channel: rates, interval and bandwidth must be positive");
  FadingChannel c;
  c.a_tilde = a_tilde;
  c.tau = tau;
  c.B_W = B_W;
  c.rate_bits = rate_bits;
  c.a = std::exp(-a_tilde * tau);
  c.Z = -std::expm1(-2.0 * a_tilde * tau);
  c.kappa = modulation_gap(rate_bits);
  return c;
}

Complex stationary_gain(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

Complex step_channel(const FadingChannel& c, Complex h, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * c.Z));
  const double re = normal(rng);
  const double im = normal(rng);
  return c.a * h + Complex(re, im);
}

double ser(const FadingChannel& c, double power, double alpha) {
  if (power < 0.0 || alpha < 0.0) throw DomainError("ser: power and fading gain must be non-negative");
  return std::exp(-power * c.tau * alpha / (c.kappa * c.B_W));
}

bool sample_outcome(const FadingChannel& c, double power, double alpha, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return uniform(rng) >= ser(c, power, alpha);
}

}  // namespace ncs
