#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ncs/channel.hpp"
#include "ncs/plant.hpp"

namespace ncs {

// Scalar error / fading grid. Fading bins are equal-probability under Exp(1);
// alpha holds the conditional mean of each bin.
struct StateGrid {
  std::vector<double> delta;
  std::vector<double> alpha;
  std::vector<double> alpha_edges;  // size alpha.size() + 1, last edge is +inf
  std::vector<double> power;

  int n_delta() const { return static_cast<int>(delta.size()); }
  int n_alpha() const { return static_cast<int>(alpha.size()); }
  int n_power() const { return static_cast<int>(power.size()); }
  int nearest_delta(double d) const;
  int alpha_bin(double a) const;
};

StateGrid make_grid(double delta_max, int n_delta, int n_alpha, double p_max, int n_intermediate = 6);

// Scalar model feeding the kernel builder.
struct MdpModel {
  double F = 0.0;
  double W = 0.0;
  double w_max = 0.0;
  double inflation = 1.0;
  double S = 1.0;
  double quant_halfwidth = 0.0;  // success leaves the error uniform on [-h, h]
  double lambda = 0.0;
  FadingChannel channel;
};

MdpModel make_model(const SampledPlant& plant, const FadingChannel& channel, double S, double lambda);

// Factorized transition law:
//   P(z', a' | z, a, p) = A(a, a') [ s(p, a') succ(z') + (1 - s(p, a')) fail(z, z') ].
// Expected stage cost is lambda p + sum_a' A(a, a') [ s succ_cost + (1 - s) fail_cost(z) ].
struct TransitionKernel {
  StateGrid grid;
  Matrix alpha_next;  // n_alpha x n_alpha
  Matrix success;     // n_power x n_alpha
  Vector succ_next;   // n_delta
  Matrix fail_next;   // n_delta x n_delta
  double succ_cost = 0.0;
  Vector fail_cost;   // n_delta
  double lambda = 0.0;
  double S = 1.0;

  Vector row(int iz, int ia, int ip) const;  // dense next-state law, index z * n_alpha + a
  double stage_cost(int iz, int ia, int ip) const;
};

// Error-state kernel: decisions on the previous estimation error.
TransitionKernel build_kernel(const StateGrid& grid, const MdpModel& m);
// Innovation-state kernel with an i.i.d. fading law.
TransitionKernel build_iid_innovation_kernel(const StateGrid& grid, const MdpModel& m);
// Error-state kernel with a perfect channel: action 1 always delivers.
TransitionKernel build_error_free_kernel(const StateGrid& grid, const MdpModel& m);

struct ViaSolution {
  double theta = 0.0;
  Matrix V;                 // n_delta x n_alpha
  std::vector<int> policy;  // power index, z * n_alpha + a
  double residual = 0.0;
  int iterations = 0;
  StateGrid grid;

  double power_at(int iz, int ia) const { return grid.power[policy[iz * grid.n_alpha() + ia]]; }
};

ViaSolution relative_value_iteration(const TransitionKernel& k, double tol = 1e-9, int max_iter = 200000);
// Relative value iteration restricted to a fixed policy; theta is its average cost.
ViaSolution relative_value_iteration(const TransitionKernel& k, const std::vector<int>& policy, double tol = 1e-9,
                                     int max_iter = 200000);

struct PolicyEvaluation {
  double avg_cost = 0.0;
  double avg_power = 0.0;
  double avg_error = 0.0;  // average of S * delta'^2
};

PolicyEvaluation evaluate_policy(const TransitionKernel& k, const std::vector<int>& policy);

// Map a power rule on (delta, alpha) onto the grid actions (nearest level).
std::vector<int> tabulate_policy(const StateGrid& grid, const std::function<double(double, double)>& rule);

ViaSolution pcefc_solve(const StateGrid& grid, const MdpModel& m);
ViaSolution pcicsis_solve(const StateGrid& grid, const MdpModel& m);

void write_csv(std::ostream& os, const ViaSolution& s);

}  // namespace ncs
