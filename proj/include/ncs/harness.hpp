#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ncs/channel.hpp"
#include "ncs/config.hpp"
#include "ncs/estimation.hpp"
#include "ncs/mdp.hpp"
#include "ncs/plant.hpp"
#include "ncs/policy.hpp"
#include "ncs/quantizer.hpp"

namespace ncs {

// Everything derived from a config that stays fixed across episodes.
struct System {
  SimConfig cfg;
  Matrix whitening;  // x_model = whitening * x_config
  ContinuousPlant plant;
  SampledPlant sampled;
  FadingChannel channel;
  QuantizerStructure quantizer;
  std::vector<int> rates;
  ControllerGain gain;
  Matrix S;  // cost weight in model coordinates
};

System build_system(const SimConfig& cfg);

// What the sensor knows when choosing the power of slot t.
struct SensorView {
  const Vector& delta_prev;  // estimation error of slot t-1
  double alpha_prev;         // fading power of slot t-1
  const Vector& innovation;  // x(t) - x_shift(t)
};

class PowerPolicy {
 public:
  virtual ~PowerPolicy() = default;
  virtual PowerDecision decide(const SensorView& v) const = 0;
  virtual std::string name() const = 0;
};

// Builds the policy named by cfg.policy (solving VIA tables when needed).
std::shared_ptr<const PowerPolicy> make_policy(const System& sys);
std::shared_ptr<const PowerPolicy> make_policy(const System& sys, const std::string& name, double lambda);

struct Metrics {
  double avg_est_cost = 0.0;
  double normalized_mse = 0.0;
  double avg_power_linear = 0.0;
  double avg_power_db = 0.0;
  double success_rate = 0.0;
  long overflow_count = 0;
  bool divergence_flag = false;
  long slots = 0;
};

struct EpisodeTrace {
  Matrix delta;            // d x T, from the error recursion
  Matrix x;                // d x T, plant state
  Matrix x_hat;            // d x T
  Matrix quant_error;      // d x T, xi - Psi * innovation
  Matrix quant_bound;      // d x T, L_n / 2^(R_n - 1)
  std::vector<double> power, threshold, alpha;
  std::vector<int> success;
  double bookkeeping_gap = 0.0;  // max |(x - x_hat) - delta|
};

struct EpisodeResult {
  Metrics metrics;
  EpisodeTrace trace;
};

EpisodeResult run_episode(const System& sys, const PowerPolicy& policy, std::uint64_t seed, bool keep_trace = false,
                          long horizon = -1);

bool diverging(const std::vector<double>& window_means);

struct Aggregate {
  Metrics mean;
  double mse_stderr = 0.0;
  double power_stderr = 0.0;
  double cost_stderr = 0.0;
  int trials = 0;
  int diverged = 0;
  std::vector<Metrics> per_trial;
};

std::uint64_t trial_seed(std::uint64_t base, int trial);
int thread_count();
Aggregate monte_carlo(const System& sys, const PowerPolicy& policy, int trials, std::uint64_t seed, long horizon = -1);

struct MatchedPower {
  double lambda = 0.0;
  Aggregate result;
  int probes = 0;
};

// Finds the price (or fixed power for FPC) whose average power is within tol of target.
MatchedPower match_power(const System& sys, const std::string& policy, double target_db, double tol_db, int trials,
                         std::uint64_t seed, long horizon = -1);

struct SweepRow {
  std::string policy;
  double eta_th = 0.0;
  double lambda = 0.0;
  double avg_power_db = 0.0;
  double normalized_mse = 0.0;
  double mse_stderr = 0.0;
};

std::vector<SweepRow> sweep_eta(const System& sys, const std::vector<double>& eta_grid, double target_db);
std::vector<SweepRow> sweep_power(const System& sys, const std::vector<double>& lambda_grid,
                                  const std::vector<std::string>& policies);
std::vector<SweepRow> sweep_power_targets(const System& sys, const std::vector<double>& targets_db,
                                          const std::vector<std::string>& policies);

// VIA grid and scalar model for a config (d = 1 only).
StateGrid via_grid(const System& sys);
MdpModel via_model(const System& sys, double lambda);

nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json aggregate_to_json(const Aggregate& a);

}  // namespace ncs
