// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ncs/harness.hpp"
#include "ncs/numerics.hpp"
#include "oracles.hpp"

using namespace ncs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

System benchmark_system() { return build_system(benchmark_config()); }
System scalar_system() { return build_system(scalar_config()); }

// Shared by the containment and stability checks: 20 seeds x 1e5 slots of the proposed policy.
struct LongRuns {
  long overflow = 0;
  int diverged = 0;
  long slots = 0;
};

LongRuns long_runs(const System& sys) {
  LongRuns out;
  const auto policy = make_policy(sys);
  for (int s = 0; s < 20; ++s) {
    const Metrics m = run_episode(sys, *policy, trial_seed(1000, s), false, 100000).metrics;
    out.overflow += m.overflow_count;
    out.diverged += m.divergence_flag ? 1 : 0;
    out.slots += 100000;
  }
  return out;
}

LongRuns g_bench_runs, g_scalar_runs;

Outcome containment() {
  g_bench_runs = long_runs(benchmark_system());
  g_scalar_runs = long_runs(scalar_system());
  const long total = g_bench_runs.overflow + g_scalar_runs.overflow;
  return {total == 0, fmt("overflows 2-D=%ld scalar=%ld over %ld slots", g_bench_runs.overflow, g_scalar_runs.overflow,
                          g_bench_runs.slots + g_scalar_runs.slots)};
}

Outcome noise_law() {
  bool ok = true;
  std::string detail;
  for (const System& sys : {benchmark_system(), scalar_system()}) {
    const auto policy = make_policy(sys);
    const Eigen::Index d = sys.sampled.F.rows();
    long violations = 0, n = 0;
    std::vector<std::vector<double>> seed_means(d);
    for (int s = 0; s < 20; ++s) {
      const EpisodeTrace tr = run_episode(sys, *policy, trial_seed(2000, s), true, 10000).trace;
      for (Eigen::Index k = 0; k < d; ++k) {
        double sum = 0.0;
        for (Eigen::Index t = 0; t < tr.quant_error.cols(); ++t) {
          if (std::abs(tr.quant_error(k, t)) > tr.quant_bound(k, t) * (1.0 + 1e-12)) ++violations;
          sum += tr.quant_error(k, t) / tr.quant_bound(k, t);
        }
        seed_means[k].push_back(sum / tr.quant_error.cols());
      }
      n += tr.quant_error.cols();
    }
    double worst_z = 0.0;
    for (const auto& v : seed_means) {
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x / v.size();
      for (double x : v) var += (x - mean) * (x - mean) / (v.size() - 1);
      worst_z = std::max(worst_z, std::abs(mean) / std::sqrt(var / v.size()));
    }
    ok = ok && violations == 0 && worst_z <= 3.0;
    detail += fmt("d=%ld: %ld/%ld out of bound, max |mean|/se=%.2f; ", static_cast<long>(d), violations, n * d, worst_z);
  }
  return {ok, detail};
}

Outcome numerics() {
  oracle::Gen gen(7);
  double expm_err = 0.0, dare_err = 0.0, lw_err = 0.0, cov_err = 0.0;
  std::vector<std::pair<Matrix, double>> cases{{benchmark_config().F_tilde, 0.05}, {Matrix::Constant(1, 1, -3.0), 0.05}};
  for (int i = 0; i < 20; ++i) {
    const int n = gen.integer(1, 4);
    cases.push_back({gen.matrix(n, n, 0.6), gen.uniform(0.01, 1.0)});
  }
  for (const auto& [A, t] : cases) {
    const Matrix ref = oracle::expm_series(A, t);
    expm_err = std::max(expm_err, (matrix_exponential(A, t) - ref).norm() / ref.norm());
    const Matrix Wc = oracle::Gen(A.rows()).spd(A.rows());
    const Matrix cref = oracle::noise_cov_simpson(A, Wc, t);
    cov_err = std::max(cov_err, (noise_covariance(A, Wc, t) - cref).norm() / cref.norm());
  }
  const System sys = benchmark_system();
  std::vector<std::tuple<Matrix, Matrix, Matrix, Matrix>> dares{
      {sys.sampled.F, sys.sampled.G, sys.cfg.D, sys.cfg.Q}};
  while (dares.size() < 100) {
    const int n = gen.integer(1, 4), m = gen.integer(1, n);
    const Matrix F = gen.matrix(n, n, 0.7), G = gen.matrix(n, m);
    // Controllability rank test.
    Matrix C(n, n * m);
    Matrix Fk = Matrix::Identity(n, n);
    for (int k = 0; k < n; ++k, Fk = Fk * F) C.middleCols(k * m, m) = Fk * G;
    if (Eigen::FullPivLU<Matrix>(C).rank() < n) continue;
    dares.push_back({F, G, gen.spd(m), gen.spd(n)});
  }
  for (const auto& [F, G, D, Q] : dares) {
    const Matrix P = solve_dare(F, G, D, Q);
    dare_err = std::max(dare_err, oracle::dare_residual(F, G, D, Q, P) / (1.0 + P.norm()));
  }
  for (double x : {-0.36787944117144233 + 1e-9, -0.3, -0.1, 0.0, 0.2, 1.0, 3.0, 10.0, 1e3, 1e8}) {
    const double w = lambert_w0(x);
    lw_err = std::max(lw_err, std::abs(w * std::exp(w) - x) / std::max(1.0, std::abs(x)));
  }
  for (Complex z : {Complex(-0.5, 0.3), Complex(0.2, -1.0), Complex(-0.3, 0.01), Complex(4.0, 7.0)}) {
    const Complex w = lambert_w0(z);
    lw_err = std::max(lw_err, std::abs(w * std::exp(w) - z) / std::max(1.0, std::abs(z)));
  }
  const bool ok = expm_err <= 1e-12 && dare_err <= 1e-10 && lw_err <= 1e-12 && cov_err <= 1e-8;
  return {ok, fmt("expm %.2e, dare %.2e, lambert %.2e, noise cov %.2e", expm_err, dare_err, lw_err, cov_err)};
}

Outcome bang_bang() {
  const System sys = benchmark_system();
  oracle::Gen gen(11);
  long bad = 0, zero_bad = 0;
  for (double lambda : {1.0, 100.0, 1e4}) {
    ValueFnParams p{sys.plant.F, sys.plant.W, sys.cfg.a_tilde, sys.cfg.p_max, sys.channel.kappa,
                    sys.cfg.B_W, lambda, sys.cfg.eta_th};
    const ApproxValueFn vf(p);
    for (int i = 0; i < 10000 / 3 + 1; ++i) {
      Vector delta(2);
      const double scale = std::pow(10.0, gen.uniform(-3.0, 2.0));
      delta << scale * gen.normal(), scale * gen.normal();
      const double alpha = std::pow(10.0, gen.uniform(-3.0, 1.5));
      const double pw = decide_power(vf, delta, alpha).p;
      if (pw != 0.0 && pw != sys.cfg.p_max) ++bad;
      if (decide_power(vf, Vector::Zero(2), alpha).p != 0.0) ++zero_bad;
    }
  }
  return {bad == 0 && zero_bad == 0, fmt("non-extreme powers %ld, nonzero power at zero error %ld", bad, zero_bad)};
}

ApproxValueFn scalar_value_fn(const System& sys, double lambda) {
  return ApproxValueFn({sys.plant.F, sys.plant.W, sys.cfg.a_tilde, sys.cfg.p_max, sys.channel.kappa, sys.cfg.B_W,
                        lambda, sys.cfg.eta_th});
}

Outcome threshold_growth() {
  const System sys = scalar_system();
  const ApproxValueFn vf = scalar_value_fn(sys, sys.cfg.lambda);
  auto th = [&](double d, double a) { return vf.threshold(Vector::Constant(1, d), a); };
  const double ratio = th(2e3, 1.0) / th(1e3, 1.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool positive = true;
  for (double a = 20.0; a <= 40.0 + 1e-9; a += 1.0, ++n) {
    const double t = th(1.0, a);
    positive = positive && t > 0.0;
    const double y = std::log(std::max(t, 1e-300));
    sx += a, sy += y, sxx += a * a, sxy += a * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const bool ok = std::abs(ratio / 4.0 - 1.0) <= 0.05 && positive && slope > 0.0;
  return {ok, fmt("threshold(2e3)/threshold(1e3) = %.4f (target 4), d log threshold / d alpha = %.4f", ratio, slope)};
}

Outcome ode_residual() {
  const System sys = scalar_system();
  const ApproxValueFn vf = scalar_value_fn(sys, sys.cfg.lambda);
  const double a = sys.cfg.a_tilde, mu = sys.plant.F(0, 0), s_u = 1.0;
  auto a1 = [&](double x) { return vf.a1_mode(0, x).real(); };
  std::vector<double> rel;
  for (double x : {1e-1, 1e-2, 1e-3}) {
    const double h = 1e-6 * x;
    const double d1 = (a1(x + h) - a1(x - h)) / (2 * h);
    const double d2 = (a1(x + h) - 2 * a1(x) + a1(x - h)) / (h * h);
    const double terms[] = {s_u, (2 * a * x + 2 * a) * d1, 4 * a * x * d2, 2 * mu * a1(x)};
    double sum = 0.0, dom = 0.0;
    for (double t : terms) sum += t, dom = std::max(dom, std::abs(t));
    rel.push_back(std::abs(sum) / dom);
  }
  const bool ok = rel[1] < rel[0] && rel[2] < rel[1];
  return {ok, fmt("relative residual at alpha 1e-1, 1e-2, 1e-3: %.4f, %.4f, %.4f", rel[0], rel[1], rel[2])};
}

Outcome via_closeness() {
  const System sys = scalar_system();
  const double lambda = sys.cfg.lambda;
  const StateGrid grid = via_grid(sys);
  const TransitionKernel k = build_kernel(grid, via_model(sys, lambda));
  const ViaSolution opt = relative_value_iteration(k);
  const ApproxValueFn vf = scalar_value_fn(sys, lambda);
  const auto rule = [&](double d, double a) { return decide_power(vf, Vector::Constant(1, d), a).p; };
  const PolicyEvaluation prop = evaluate_policy(k, tabulate_policy(grid, rule));
  const double gap = (prop.avg_cost - opt.theta) / opt.theta;

  SimConfig fine_cfg = sys.cfg;
  fine_cfg.via_delta_points = 2 * fine_cfg.via_delta_points - 1;
  fine_cfg.via_alpha_bins = 2 * fine_cfg.via_alpha_bins;
  System fine = sys;
  fine.cfg = fine_cfg;
  const ViaSolution opt_fine = relative_value_iteration(build_kernel(via_grid(fine), via_model(fine, lambda)));
  const double refine = std::abs(opt_fine.theta - opt.theta) / opt.theta;
  const bool ok = gap <= 0.10 && refine < 0.02;
  return {ok, fmt("theta_via %.4f, proposed %.4f (gap %.1f%%, power %.3f), refinement change %.2f%%", opt.theta,
                  prop.avg_cost, 100 * gap, prop.avg_power, 100 * refine)};
}

Outcome baseline_ordering() {
  const System sys = benchmark_system();
  const int trials = sys.cfg.probe_trials;
  bool ok = true;
  std::string detail;
  for (double target : {8.0, 11.0, 14.0}) {
    std::vector<Aggregate> res;
    for (const char* name : {"proposed", "fpc", "copc"})
      res.push_back(match_power(sys, name, target, sys.cfg.power_tol_db, trials, sys.cfg.seed).result);
    detail += fmt("%.0f dB: %.2f/%.2f/%.2f; ", target, res[0].mean.normalized_mse, res[1].mean.normalized_mse,
                  res[2].mean.normalized_mse);
    for (int b = 1; b <= 2; ++b) {
      const double pooled = std::hypot(res[0].mse_stderr, res[b].mse_stderr);
      ok = ok && res[0].mean.normalized_mse + pooled < res[b].mean.normalized_mse;
    }
  }
  return {ok, "normalized MSE proposed/fpc/copc at " + detail};
}

Outcome eta_sweep() {
  const System sys = benchmark_system();
  const auto rows = sweep_eta(sys, sys.cfg.eta_grid, 14.0);
  size_t best = 0;
  std::string curve;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].normalized_mse < rows[best].normalized_mse) best = i;
    curve += fmt("%.2f ", rows[i].normalized_mse);
  }
  const bool ok = best > 0 && best + 1 < rows.size();
  return {ok, fmt("argmin eta_th %.2f; curve ", rows[best].eta_th) + curve};
}

SimConfig violating_config() {
  SimConfig c = scalar_config();
  c.F_tilde(0, 0) = 2.0;
  c.p_max = 2.0;
  c.p0 = 2.0;
  return c;
}

Outcome stability() {
  const System good = benchmark_system();
  const auto suf = check_sufficient(good.sampled.F, good.cfg.R, good.cfg.p_max, good.cfg.tau, good.channel.kappa,
                                    good.cfg.B_W);
  const System bad = build_system(violating_config());
  const auto nec =
      check_necessary(bad.sampled.F, bad.cfg.R, bad.cfg.p_max, bad.cfg.tau, bad.channel.kappa, bad.cfg.B_W);
  const auto policy = make_policy(bad);
  int flagged = 0;
  for (int s = 0; s < 20; ++s)
    flagged += run_episode(bad, *policy, trial_seed(3000, s), false, 10000).metrics.divergence_flag ? 1 : 0;
  const bool ok = suf.holds && !nec.holds && g_bench_runs.diverged == 0 && flagged >= 18;
  return {ok, fmt("sufficient holds=%d, diverged %d/20; necessary violated=%d, flagged %d/20", suf.holds ? 1 : 0,
                  g_bench_runs.diverged, nec.holds ? 0 : 1, flagged)};
}

Outcome control_independence() {
  const System sys = benchmark_system();
  System halved = sys;
  halved.gain.K *= 0.5;
  const auto policy = make_policy(sys);
  const EpisodeTrace a = run_episode(sys, *policy, 4242, true, 20000).trace;
  const EpisodeTrace b = run_episode(halved, *policy, 4242, true, 20000).trace;
  const bool same = a.delta.cols() == b.delta.cols() && (a.delta.array() == b.delta.array()).all();
  const bool states_differ = !(a.x.array() == b.x.array()).all();
  return {same && states_differ, fmt("error traces identical=%d, plant traces differ=%d", same ? 1 : 0,
                                     states_differ ? 1 : 0)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"quantizer containment", containment},
      {"quantization noise law", noise_law},
      {"numerical kernels", numerics},
      {"bang-bang power decision", bang_bang},
      {"threshold growth order", threshold_growth},
      {"branch-1 ODE residual decay", ode_residual},
      {"VIA closeness", via_closeness},
      {"baseline ordering", baseline_ordering},
      {"eta_th sweep interior minimum", eta_sweep},
      {"stability dichotomy", stability},
      {"control independence of the error", control_independence},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures;
}
