#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ncs/types.hpp"

namespace ncs {

struct SimConfig {
  // plant
  Matrix F_tilde;
  Matrix G_tilde;
  Matrix W_tilde;
  double w_tilde_max = 1.0;
  Vector x0;
  double L0 = 1.0;  // initial quantizer range, must bound |x0|
  // costs
  Matrix Q;
  Matrix D;
  Matrix S;
  // channel
  double a_tilde = 5.0;
  double B_W = 1.0;
  int R = 4;
  double p_max = 160.0;
  double tau = 0.05;
  // policy
  std::string policy = "proposed";
  double lambda = 100.0;
  double eta_th = 0.68;
  double p0 = 25.118864315095799;  // FPC power, 14 dB
  // simulation
  long horizon = 20000;
  long burn_in = -1;  // negative: 10% of horizon
  int trials = 30;
  std::uint64_t seed = 1;
  // VIA grid (scalar plants)
  double via_delta_max = 0.0;  // 0: five stationary standard deviations of the uncontrolled error
  int via_delta_points = 81;
  int via_alpha_bins = 21;
  int via_power_levels = 6;  // intermediate levels between 0 and p_max
  // sweeps
  double power_target_db = 14.0;
  double power_tol_db = 0.5;
  int probe_trials = 30;
  std::vector<double> eta_grid{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> lambda_grid;
  std::vector<std::string> policies{"proposed", "fpc", "copc"};

  long effective_burn_in() const { return burn_in < 0 ? horizon / 10 : burn_in; }
  int dim() const { return static_cast<int>(F_tilde.rows()); }
};

// Two-dimensional benchmark plant with complex open-loop modes.
SimConfig benchmark_config();
// Scalar stable plant used for decision-region and VIA studies.
SimConfig scalar_config();

void validate(const SimConfig& c);

// Flat-key JSON; a "preset" key ("benchmark" or "scalar") selects the base. Unknown keys are rejected.
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::string& path);
nlohmann::json config_to_json(const SimConfig& c);

}  // namespace ncs
