#include "ncs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace ncs {

using nlohmann::json;

System build_system(const SimConfig& cfg) {
  validate(cfg);
  System sys;
  sys.cfg = cfg;
  ContinuousPlant raw{cfg.F_tilde, cfg.G_tilde, cfg.W_tilde, cfg.w_tilde_max, cfg.x0};
  const Whitening wh = whiten(raw);
  sys.whitening = wh.M;
  sys.plant = wh.plant;
  sys.S = wh.M * cfg.S * wh.M.transpose();
  sys.sampled = discretize(sys.plant, cfg.tau);
  sys.channel = make_channel(cfg.a_tilde, cfg.tau, cfg.B_W, cfg.R);
  sys.quantizer = build_structure(sys.sampled.F);
  const double p_succ = cfg.p_max * cfg.tau / (sys.channel.kappa * cfg.B_W + cfg.p_max * cfg.tau);
  try {
    sys.rates = allocate_rates(sys.quantizer.modulus, cfg.R, p_succ);
  } catch (const InfeasibleRates&) {
    // Beyond the stabilisable region; keep simulating with the unconstrained split.
    sys.rates = allocate_rates(sys.quantizer.modulus, cfg.R, std::numeric_limits<double>::infinity());
  }
  sys.gain = make_gain(sys.sampled, wh.M * cfg.Q * wh.M.transpose(), cfg.D);
  return sys;
}

namespace {

class ProposedPolicy : public PowerPolicy {
 public:
  explicit ProposedPolicy(const ValueFnParams& p) : vf_(p) {}
  PowerDecision decide(const SensorView& v) const override { return decide_power(vf_, v.delta_prev, v.alpha_prev); }
  std::string name() const override { return "proposed"; }

 private:
  ApproxValueFn vf_;
};

class FixedPolicy : public PowerPolicy {
 public:
  explicit FixedPolicy(double p0) : p0_(fpc_power(p0)) {}
  PowerDecision decide(const SensorView&) const override { return {p0_, std::nan("")}; }
  std::string name() const override { return "fpc"; }

 private:
  double p0_;
};

class CsiPolicy : public PowerPolicy {
 public:
  CsiPolicy(double lambda, double a, double p_max) : lambda_(lambda), a_(a), p_max_(p_max) {}
  PowerDecision decide(const SensorView& v) const override {
    return {copc_power(lambda_, a_, std::max(v.alpha_prev, 1e-300), p_max_), std::nan("")};
  }
  std::string name() const override { return "copc"; }

 private:
  double lambda_, a_, p_max_;
};

class TablePolicy : public PowerPolicy {
 public:
  TablePolicy(ViaSolution s, bool on_innovation, bool ignore_alpha, std::string name)
      : s_(std::move(s)), on_innovation_(on_innovation), ignore_alpha_(ignore_alpha), name_(std::move(name)) {}
  PowerDecision decide(const SensorView& v) const override {
    const double z = on_innovation_ ? v.innovation(0) : v.delta_prev(0);
    const int iz = s_.grid.nearest_delta(z);
    const int ia = ignore_alpha_ ? 0 : s_.grid.alpha_bin(v.alpha_prev);
    return {s_.power_at(iz, ia), std::nan("")};
  }
  std::string name() const override { return name_; }

 private:
  ViaSolution s_;
  bool on_innovation_, ignore_alpha_;
  std::string name_;
};

}  // namespace

StateGrid via_grid(const System& sys) {
  if (sys.cfg.dim() != 1) throw Unsupported("VIA policies need a scalar plant");
  double dmax = sys.cfg.via_delta_max;
  if (!(dmax > 0.0)) {
    const double f = sys.sampled.F(0, 0);
    dmax = 5.0 * std::sqrt(sys.sampled.W(0, 0) / (1.0 - std::min(f * f, 0.99)));
  }
  return make_grid(dmax, sys.cfg.via_delta_points, sys.cfg.via_alpha_bins, sys.cfg.p_max, sys.cfg.via_power_levels);
}

MdpModel via_model(const System& sys, double lambda) {
  if (sys.cfg.dim() != 1) throw Unsupported("VIA policies need a scalar plant");
  return make_model(sys.sampled, sys.channel, sys.S(0, 0), lambda);
}

std::shared_ptr<const PowerPolicy> make_policy(const System& sys, const std::string& name, double lambda) {
  const SimConfig& c = sys.cfg;
  if (name == "proposed") {
    ValueFnParams p{sys.plant.F, sys.plant.W, c.a_tilde, c.p_max, sys.channel.kappa, c.B_W, lambda, c.eta_th};
    return std::make_shared<ProposedPolicy>(p);
  }
  if (name == "fpc") return std::make_shared<FixedPolicy>(c.p0);
  if (name == "copc") return std::make_shared<CsiPolicy>(lambda, sys.channel.a, c.p_max);
  if (name == "via") {
    const auto k = build_kernel(via_grid(sys), via_model(sys, lambda));
    return std::make_shared<TablePolicy>(relative_value_iteration(k), false, false, name);
  }
  if (name == "pcefc")
    return std::make_shared<TablePolicy>(pcefc_solve(via_grid(sys), via_model(sys, lambda)), false, true, name);
  if (name == "pcicsis")
    return std::make_shared<TablePolicy>(pcicsis_solve(via_grid(sys), via_model(sys, lambda)), true, false, name);
  throw ConfigError("unknown policy '" + name + "'");
}

std::shared_ptr<const PowerPolicy> make_policy(const System& sys) {
  return make_policy(sys, sys.cfg.policy, sys.cfg.lambda);
}

bool diverging(const std::vector<double>& means) {
  for (double m : means)
    if (!std::isfinite(m)) return true;
  const size_t n = means.size();
  if (n < 4) return false;
  // Each of the last four windows at least doubles the previous one.
  for (size_t k = n - 3; k < n; ++k)
    if (!(means[k] >= 2.0 * means[k - 1]) || means[k] <= 0.0) return false;
  return true;
}

EpisodeResult run_episode(const System& sys, const PowerPolicy& policy, std::uint64_t seed, bool keep_trace,
                          long horizon) {
  const SimConfig& c = sys.cfg;
  const long T = horizon > 0 ? horizon : c.horizon;
  const long burn = horizon > 0 && c.burn_in < 0 ? T / 10 : std::min(c.effective_burn_in(), T - 1);
  const Eigen::Index d = sys.sampled.F.rows();
  const Matrix& F = sys.sampled.F;
  const Matrix& G = sys.sampled.G;

  Rng rw = make_rng(seed, 1), rh = make_rng(seed, 2), rg = make_rng(seed, 3);
  Vector x = sys.whitening * c.x0;
  QuantizerState q = init_state(sys.quantizer, c.L0);
  Vector x_hat = Vector::Zero(d);
  Vector u = Vector::Zero(G.cols());
  Vector delta = Vector::Zero(d);
  Vector w_prev = x - q.x_shift;  // makes the first innovation equal x(0) - x_shift(0)
  Vector innov = w_prev;
  Complex h = stationary_gain(rh);
  double alpha_prev = std::norm(h);

  EpisodeResult out;
  EpisodeTrace& tr = out.trace;
  if (keep_trace) {
    tr.delta.resize(d, T);
    tr.x.resize(d, T);
    tr.x_hat.resize(d, T);
    tr.quant_error.resize(d, T);
    tr.quant_bound.resize(d, T);
    tr.power.reserve(T);
    tr.threshold.reserve(T);
    tr.alpha.reserve(T);
    tr.success.reserve(T);
  }

  constexpr int kWindows = 8;
  std::vector<double> window_sum(kWindows, 0.0);
  std::vector<long> window_n(kWindows, 0);
  double cost_sum = 0.0, power_sum = 0.0;
  long successes = 0, counted = 0;
  Metrics& m = out.metrics;

  for (long t = 0; t < T; ++t) {
    const PowerDecision dec = policy.decide(SensorView{delta, alpha_prev, innov});
    const QuantizeResult qr = quantize_innovation(q, sys.rates, innov);
    if (qr.overflow) ++m.overflow_count;
    h = step_channel(sys.channel, h, rh);
    const double alpha = std::norm(h);
    const bool delivered = sample_outcome(sys.channel, dec.p, alpha, rg) && !qr.overflow;

    x_hat = update_estimate(F, G, x_hat, u, delivered, qr.xi, q);
    delta = step_delta(F, delta, w_prev, delivered, qr.e, q.Psi);
    const double cost = delta.dot(sys.S * delta);

    if (keep_trace) {
      tr.delta.col(t) = delta;
      tr.x.col(t) = x;
      tr.x_hat.col(t) = x_hat;
      tr.quant_error.col(t) = qr.e;
      for (Eigen::Index n = 0; n < d; ++n) tr.quant_bound(n, t) = q.L(n) * std::ldexp(1.0, 1 - sys.rates[n]);
      tr.power.push_back(dec.p);
      tr.threshold.push_back(dec.threshold);
      tr.alpha.push_back(alpha);
      tr.success.push_back(delivered ? 1 : 0);
      tr.bookkeeping_gap = std::max(tr.bookkeeping_gap, (x - x_hat - delta).cwiseAbs().maxCoeff());
    }
    if (t >= burn) {
      cost_sum += cost;
      power_sum += dec.p;
      successes += delivered ? 1 : 0;
      ++counted;
      const int wdx = static_cast<int>((t - burn) * kWindows / (T - burn));
      window_sum[wdx] += cost;
      ++window_n[wdx];
    }

    u = ce_control(sys.gain, x_hat);
    const Vector w = sample_disturbance(sys.sampled, rw);
    x = step_plant(sys.sampled, x, u, w);
    update_shift(q, F, G, delivered, qr.xi, u);
    update_range(q, sys.quantizer, sys.rates, delivered, sys.sampled.w_max);
    innov = F * delta + w;
    w_prev = w;
    alpha_prev = alpha;

    if (!std::isfinite(cost) || !x.allFinite() || !q.L.allFinite() || !innov.allFinite()) {
      m.divergence_flag = true;
      break;
    }
  }

  m.slots = counted;
  const double norm = (sys.S * sys.sampled.W).trace();
  if (m.divergence_flag) {
    m.avg_est_cost = std::numeric_limits<double>::infinity();
  } else if (counted > 0) {
    m.avg_est_cost = cost_sum / counted;
  }
  m.normalized_mse = m.avg_est_cost / norm;
  m.avg_power_linear = counted > 0 ? power_sum / counted : 0.0;
  m.avg_power_db = 10.0 * std::log10(m.avg_power_linear);
  m.success_rate = counted > 0 ? static_cast<double>(successes) / counted : 0.0;
  if (!m.divergence_flag) {
    std::vector<double> means;
    for (int k = 0; k < kWindows; ++k)
      if (window_n[k] > 0) means.push_back(window_sum[k] / window_n[k]);
    m.divergence_flag = diverging(means);
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  // splitmix64 of (base, trial)
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NCS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  return std::max(1, n);
}

Aggregate monte_carlo(const System& sys, const PowerPolicy& policy, int trials, std::uint64_t seed, long horizon) {
  if (trials < 1) throw DomainError("monte_carlo: need at least one trial");
  Aggregate agg;
  agg.trials = trials;
  agg.per_trial.resize(trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < trials; i = next++)
      agg.per_trial[i] = run_episode(sys, policy, trial_seed(seed, i), false, horizon).metrics;
  };
  const int nthreads = std::min(thread_count(), trials);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Metrics& mean = agg.mean;
  double mse2 = 0.0, pow2 = 0.0, cost2 = 0.0;
  for (const auto& m : agg.per_trial) {
    mean.avg_est_cost += m.avg_est_cost / trials;
    mean.normalized_mse += m.normalized_mse / trials;
    mean.avg_power_linear += m.avg_power_linear / trials;
    mean.success_rate += m.success_rate / trials;
    mean.overflow_count += m.overflow_count;
    mean.slots += m.slots;
    if (m.divergence_flag) ++agg.diverged;
  }
  for (const auto& m : agg.per_trial) {
    mse2 += std::pow(m.normalized_mse - mean.normalized_mse, 2);
    pow2 += std::pow(m.avg_power_linear - mean.avg_power_linear, 2);
    cost2 += std::pow(m.avg_est_cost - mean.avg_est_cost, 2);
  }
  if (trials > 1) {
    agg.mse_stderr = std::sqrt(mse2 / (trials - 1) / trials);
    agg.power_stderr = std::sqrt(pow2 / (trials - 1) / trials);
    agg.cost_stderr = std::sqrt(cost2 / (trials - 1) / trials);
  }
  mean.avg_power_db = 10.0 * std::log10(mean.avg_power_linear);
  mean.divergence_flag = agg.diverged > 0;
  return agg;
}

MatchedPower match_power(const System& sys, const std::string& policy, double target_db, double tol_db, int trials,
                         std::uint64_t seed, long horizon) {
  MatchedPower out;
  if (policy == "fpc") {
    System s = sys;
    s.cfg.p0 = std::pow(10.0, target_db / 10.0);
    if (s.cfg.p0 > s.cfg.p_max) throw TargetUnreachable("match_power: target above p_max");
    out.result = monte_carlo(s, *make_policy(s, "fpc", s.cfg.lambda), trials, seed, horizon);
    out.lambda = s.cfg.p0;
    out.probes = 1;
    return out;
  }
  // Search over a price q whose average power falls as q rises; COPC power rises with lambda.
  const bool inverted = policy == "copc";
  auto to_lambda = [&](double q) { return inverted ? 1.0 / q : q; };
  auto probe = [&](double q) {
    ++out.probes;
    return monte_carlo(sys, *make_policy(sys, policy, to_lambda(q)), trials, seed, horizon);
  };
  auto gap = [&](const Aggregate& a) {
    return std::isfinite(a.mean.avg_power_db) ? a.mean.avg_power_db - target_db : -1e9;
  };

  double lam = inverted ? 1.0 / sys.cfg.lambda : sys.cfg.lambda;
  Aggregate cur = probe(lam);
  if (std::abs(gap(cur)) <= tol_db) return {to_lambda(lam), cur, out.probes};
  // Power falls as the price rises: bracket the target in log(lambda).
  double lo = lam, hi = lam;
  Aggregate best = cur;
  double best_lam = lam;
  const bool too_much = gap(cur) > 0.0;
  for (int k = 0; k < 40; ++k) {
    const double next = too_much ? hi * 10.0 : lo / 10.0;
    Aggregate a = probe(next);
    if (std::abs(gap(a)) < std::abs(gap(best))) best = a, best_lam = next;
    if (std::abs(gap(a)) <= tol_db) return {to_lambda(next), a, out.probes};
    if (too_much) {
      lo = hi;
      hi = next;
      if (gap(a) < 0.0) break;
    } else {
      hi = lo;
      lo = next;
      if (gap(a) > 0.0) break;
    }
    if (k == 39) throw TargetUnreachable("match_power: could not bracket the power target");
  }
  for (int k = 0; k < 60; ++k) {
    const double mid = std::sqrt(lo * hi);
    Aggregate a = probe(mid);
    if (std::abs(gap(a)) < std::abs(gap(best))) best = a, best_lam = mid;
    if (std::abs(gap(a)) <= tol_db) return {to_lambda(mid), a, out.probes};
    (gap(a) > 0.0 ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-9) break;
  }
  throw TargetUnreachable("match_power: closest power " + std::to_string(best.mean.avg_power_db) + " dB at lambda " +
                          std::to_string(to_lambda(best_lam)));
}

std::vector<SweepRow> sweep_eta(const System& sys, const std::vector<double>& eta_grid, double target_db) {
  std::vector<SweepRow> rows;
  for (double eta : eta_grid) {
    System s = sys;
    s.cfg.eta_th = eta;
    const MatchedPower mp = match_power(s, "proposed", target_db, s.cfg.power_tol_db, s.cfg.probe_trials, s.cfg.seed);
    const Aggregate fin = monte_carlo(s, *make_policy(s, "proposed", mp.lambda), s.cfg.trials, s.cfg.seed + 1);
    rows.push_back({"proposed", eta, mp.lambda, fin.mean.avg_power_db, fin.mean.normalized_mse, fin.mse_stderr});
  }
  return rows;
}

std::vector<SweepRow> sweep_power(const System& sys, const std::vector<double>& lambda_grid,
                                  const std::vector<std::string>& policies) {
  std::vector<SweepRow> rows;
  for (const auto& name : policies)
    for (double lam : lambda_grid) {
      System s = sys;
      // For FPC the grid lists transmit powers.
      if (name == "fpc") s.cfg.p0 = std::min(lam, s.cfg.p_max);
      const Aggregate a = monte_carlo(s, *make_policy(s, name, lam), s.cfg.trials, s.cfg.seed);
      rows.push_back({name, s.cfg.eta_th, lam, a.mean.avg_power_db, a.mean.normalized_mse, a.mse_stderr});
    }
  return rows;
}

std::vector<SweepRow> sweep_power_targets(const System& sys, const std::vector<double>& targets_db,
                                          const std::vector<std::string>& policies) {
  std::vector<SweepRow> rows;
  for (const auto& name : policies)
    for (double target : targets_db) {
      const MatchedPower mp = match_power(sys, name, target, sys.cfg.power_tol_db, sys.cfg.probe_trials, sys.cfg.seed);
      System s = sys;
      if (name == "fpc") s.cfg.p0 = mp.lambda;
      const Aggregate fin = monte_carlo(s, *make_policy(s, name, mp.lambda), s.cfg.trials, s.cfg.seed + 1);
      rows.push_back({name, s.cfg.eta_th, mp.lambda, fin.mean.avg_power_db, fin.mean.normalized_mse, fin.mse_stderr});
    }
  return rows;
}

json metrics_to_json(const Metrics& m) {
  return json{{"avg_est_cost", m.avg_est_cost},         {"normalized_mse", m.normalized_mse},
              {"avg_power_linear", m.avg_power_linear}, {"avg_power_db", m.avg_power_db},
              {"success_rate", m.success_rate},         {"overflow_count", m.overflow_count},
              {"divergence_flag", m.divergence_flag},   {"slots", m.slots}};
}

json aggregate_to_json(const Aggregate& a) {
  json j = metrics_to_json(a.mean);
  j["normalized_mse_stderr"] = a.mse_stderr;
  j["avg_power_linear_stderr"] = a.power_stderr;
  j["avg_est_cost_stderr"] = a.cost_stderr;
  j["trials"] = a.trials;
  j["diverged_trials"] = a.diverged;
  return j;
}

}  // namespace ncs
