#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncs/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<long> horizon;
  std::optional<std::string> policy;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file (flat keys)");
  app->add_option("--seed", c.seed, "base RNG seed");
  app->add_option("--trials", c.trials, "Monte Carlo trials");
  app->add_option("--horizon", c.horizon, "slots per episode");
  app->add_option("--policy", c.policy, "proposed | fpc | copc | pcefc | pcicsis | via");
  app->add_option("--out", c.out, "output directory");
}

ncs::SimConfig resolve(const Common& c) {
  ncs::SimConfig cfg = c.config.empty() ? ncs::benchmark_config() : ncs::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.trials) cfg.trials = *c.trials;
  if (c.horizon) cfg.horizon = *c.horizon;
  if (c.policy) cfg.policy = *c.policy;
  ncs::validate(cfg);
  return cfg;
}

void emit(const Common& c, const std::string& file, const std::string& body) {
  std::cout << body;
  if (c.out.empty()) return;
  fs::create_directories(c.out);
  std::ofstream(fs::path(c.out) / file) << body;
}

std::string rows_csv(const std::vector<ncs::SweepRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "policy,eta_th,lambda,avg_power_db,normalized_mse,normalized_mse_stderr\n";
  for (const auto& r : rows)
    os << r.policy << ',' << r.eta_th << ',' << r.lambda << ',' << r.avg_power_db << ',' << r.normalized_mse << ','
       << r.mse_stderr << '\n';
  return os.str();
}

int simulate(const Common& c) {
  const ncs::System sys = ncs::build_system(resolve(c));
  const auto policy = ncs::make_policy(sys);
  const ncs::Aggregate agg = ncs::monte_carlo(sys, *policy, sys.cfg.trials, sys.cfg.seed);
  json j = ncs::aggregate_to_json(agg);
  j["policy"] = sys.cfg.policy;
  j["seed"] = sys.cfg.seed;
  emit(c, "metrics.json", j.dump(2) + "\n");
  return agg.diverged > 0 ? 2 : 0;
}

int sweep_eta(const Common& c, double target) {
  const ncs::System sys = ncs::build_system(resolve(c));
  const auto rows = ncs::sweep_eta(sys, sys.cfg.eta_grid, std::isnan(target) ? sys.cfg.power_target_db : target);
  emit(c, "sweep_eta.csv", rows_csv(rows));
  return 0;
}

int sweep_power(const Common& c, const std::vector<double>& targets) {
  const ncs::System sys = ncs::build_system(resolve(c));
  std::vector<std::string> policies = sys.cfg.policies;
  if (c.policy) policies = {*c.policy};
  std::vector<ncs::SweepRow> rows;
  if (!targets.empty())
    rows = ncs::sweep_power_targets(sys, targets, policies);
  else if (!sys.cfg.lambda_grid.empty())
    rows = ncs::sweep_power(sys, sys.cfg.lambda_grid, policies);
  else
    throw ncs::ConfigError("sweep-power needs --targets-db or a lambda_grid in the config");
  emit(c, "sweep_power.csv", rows_csv(rows));
  return 0;
}

int via_solve(const Common& c) {
  const ncs::System sys = ncs::build_system(resolve(c));
  const auto kernel = ncs::build_kernel(ncs::via_grid(sys), ncs::via_model(sys, sys.cfg.lambda));
  const ncs::ViaSolution s = ncs::relative_value_iteration(kernel);
  std::ostringstream csv;
  ncs::write_csv(csv, s);
  const json summary{{"theta", s.theta},
                     {"residual", s.residual},
                     {"iterations", s.iterations},
                     {"delta_points", s.grid.n_delta()},
                     {"alpha_bins", s.grid.n_alpha()},
                     {"lambda", sys.cfg.lambda}};
  std::cout << summary.dump(2) << "\n";
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "via_solution.csv") << csv.str();
    std::ofstream(fs::path(c.out) / "via_summary.json") << summary.dump(2) << "\n";
  }
  return 0;
}

int stability_check(const Common& c) {
  const ncs::System sys = ncs::build_system(resolve(c));
  const auto& cfg = sys.cfg;
  const auto suf = ncs::check_sufficient(sys.sampled.F, cfg.R, cfg.p_max, cfg.tau, sys.channel.kappa, cfg.B_W);
  const auto nec = ncs::check_necessary(sys.sampled.F, cfg.R, cfg.p_max, cfg.tau, sys.channel.kappa, cfg.B_W);
  const json j{{"instability_measure", ncs::instability_measure(sys.sampled.F)},
               {"success_probability_bound", suf.lhs},
               {"rate_term", suf.rate_term},
               {"growth_term", suf.growth_term},
               {"sufficient", suf.holds},
               {"sufficient_margin", suf.margin},
               {"necessary", nec.holds},
               {"necessary_margin", nec.margin}};
  emit(c, "stability.json", j.dump(2) + "\n");
  return 0;
}

int bench(const Common& c) {
  const ncs::System sys = ncs::build_system(resolve(c));
  const long n = 100000;
  ncs::Rng rng = ncs::make_rng(sys.cfg.seed, 99);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  const Eigen::Index d = sys.sampled.F.rows();
  std::vector<ncs::Vector> deltas(1024, ncs::Vector(d));
  std::vector<double> alphas(1024);
  for (size_t i = 0; i < deltas.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) deltas[i](k) = 0.5 * normal(rng);
    alphas[i] = expo(rng);
  }
  json j = json::object();
  std::vector<std::string> names{"proposed", "fpc", "copc"};
  if (d == 1) names.insert(names.end(), {"pcefc", "pcicsis", "via"});
  for (const auto& name : names) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto policy = ncs::make_policy(sys, name, sys.cfg.lambda);
    const auto t1 = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (long i = 0; i < n; ++i) {
      const auto& dv = deltas[i & 1023];
      sink += policy->decide(ncs::SensorView{dv, alphas[i & 1023], dv}).p;
    }
    const auto t2 = std::chrono::steady_clock::now();
    j[name] = {{"setup_seconds", std::chrono::duration<double>(t1 - t0).count()},
               {"decision_ns", std::chrono::duration<double, std::nano>(t2 - t1).count() / n},
               {"mean_power", sink / n}};
  }
  emit(c, "bench.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power control and quantized estimation over fading channels"};
  app.require_subcommand(1);
  Common common;
  double eta_target = std::nan("");
  std::vector<double> targets;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo run of one config, metrics as JSON");
  add_common(sim, common);
  auto* seta = app.add_subcommand("sweep-eta", "normalized MSE versus eta_th at matched power");
  add_common(seta, common);
  seta->add_option("--target-db", eta_target, "average power target");
  auto* spow = app.add_subcommand("sweep-power", "power / MSE tradeoff per policy");
  add_common(spow, common);
  spow->add_option("--targets-db", targets, "match these average powers instead of the lambda grid");
  auto* via = app.add_subcommand("via-solve", "relative value iteration on a scalar config");
  add_common(via, common);
  auto* stab = app.add_subcommand("stability-check", "sufficient and necessary stability conditions");
  add_common(stab, common);
  auto* bch = app.add_subcommand("bench", "per-decision cost of each policy");
  add_common(bch, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*sim) return simulate(common);
    if (*seta) return sweep_eta(common, eta_target);
    if (*spow) return sweep_power(common, targets);
    if (*via) return via_solve(common);
    if (*stab) return stability_check(common);
    if (*bch) return bench(common);
  } catch (const ncs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ncs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
