#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "ncs/harness.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

ncs::System system_from(const std::string& config_json) {
  const ncs::SimConfig cfg = ncs::config_from_json(json::parse(config_json.empty() ? "{}" : config_json));
  ncs::validate(cfg);
  return ncs::build_system(cfg);
}

ncs::ApproxValueFn value_fn(const ncs::System& sys, double lambda) {
  const auto& c = sys.cfg;
  return ncs::ApproxValueFn(
      {sys.plant.F, sys.plant.W, c.a_tilde, c.p_max, sys.channel.kappa, c.B_W, lambda, c.eta_th});
}

py::dict trace_dict(const ncs::EpisodeTrace& t) {
  py::dict d;
  d["delta"] = t.delta;
  d["x"] = t.x;
  d["x_hat"] = t.x_hat;
  d["quant_error"] = t.quant_error;
  d["quant_bound"] = t.quant_bound;
  d["power"] = t.power;
  d["threshold"] = t.threshold;
  d["alpha"] = t.alpha;
  d["success"] = t.success;
  d["bookkeeping_gap"] = t.bookkeeping_gap;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ncs, m) {
  auto base = py::register_exception<ncs::Error>(m, "NcsError");
  py::register_exception<ncs::ConfigError>(m, "ConfigError", base.ptr());

  m.def("matrix_exponential", &ncs::matrix_exponential, py::arg("A"), py::arg("t"));
  m.def("noise_covariance", &ncs::noise_covariance, py::arg("A"), py::arg("W"), py::arg("tau"));
  m.def("solve_dare", &ncs::solve_dare, py::arg("F"), py::arg("G"), py::arg("D"), py::arg("Q"),
        py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def("lambert_w0", py::overload_cast<double>(&ncs::lambert_w0), py::arg("x"));
  m.def("lambert_w0_complex", py::overload_cast<ncs::Complex>(&ncs::lambert_w0), py::arg("z"));

  m.def("resolved_config", [](const std::string& cfg) { return ncs::config_to_json(system_from(cfg).cfg).dump(); },
        py::arg("config_json") = "");

  m.def(
      "threshold",
      [](const std::string& cfg, const ncs::Vector& delta, double alpha, double lambda) {
        const ncs::System sys = system_from(cfg);
        return value_fn(sys, std::isnan(lambda) ? sys.cfg.lambda : lambda).threshold(delta, alpha);
      },
      py::arg("config_json"), py::arg("delta"), py::arg("alpha"), py::arg("lambda_") = std::nan(""));

  m.def(
      "simulate",
      [](const std::string& cfg, std::optional<std::uint64_t> seed, std::optional<int> trials) {
        const ncs::System sys = system_from(cfg);
        const auto policy = ncs::make_policy(sys);
        ncs::Aggregate agg;
        {
          py::gil_scoped_release release;
          agg = ncs::monte_carlo(sys, *policy, trials.value_or(sys.cfg.trials), seed.value_or(sys.cfg.seed));
        }
        return ncs::aggregate_to_json(agg).dump();
      },
      py::arg("config_json") = "", py::arg("seed") = py::none(), py::arg("trials") = py::none());

  m.def(
      "run_episode",
      [](const std::string& cfg, std::uint64_t seed, long horizon) {
        const ncs::System sys = system_from(cfg);
        const auto policy = ncs::make_policy(sys);
        ncs::EpisodeResult r;
        {
          py::gil_scoped_release release;
          r = ncs::run_episode(sys, *policy, seed, true, horizon);
        }
        return py::make_tuple(ncs::metrics_to_json(r.metrics).dump(), trace_dict(r.trace));
      },
      py::arg("config_json") = "", py::arg("seed") = 1, py::arg("horizon") = -1);

  m.def(
      "stability_check",
      [](const std::string& cfg) {
        const ncs::System sys = system_from(cfg);
        const auto& c = sys.cfg;
        const auto suf = ncs::check_sufficient(sys.sampled.F, c.R, c.p_max, c.tau, sys.channel.kappa, c.B_W);
        const auto nec = ncs::check_necessary(sys.sampled.F, c.R, c.p_max, c.tau, sys.channel.kappa, c.B_W);
        py::dict d;
        d["sufficient"] = suf.holds;
        d["sufficient_margin"] = suf.margin;
        d["necessary"] = nec.holds;
        d["necessary_margin"] = nec.margin;
        d["instability_measure"] = ncs::instability_measure(sys.sampled.F);
        return d;
      },
      py::arg("config_json") = "");

  m.def(
      "via_solve",
      [](const std::string& cfg) {
        const ncs::System sys = system_from(cfg);
        ncs::ViaSolution s;
        {
          py::gil_scoped_release release;
          s = ncs::relative_value_iteration(ncs::build_kernel(ncs::via_grid(sys), ncs::via_model(sys, sys.cfg.lambda)));
        }
        ncs::Matrix power(s.grid.n_delta(), s.grid.n_alpha());
        for (int i = 0; i < s.grid.n_delta(); ++i)
          for (int a = 0; a < s.grid.n_alpha(); ++a) power(i, a) = s.power_at(i, a);
        py::dict d;
        d["theta"] = s.theta;
        d["residual"] = s.residual;
        d["iterations"] = s.iterations;
        d["delta"] = s.grid.delta;
        d["alpha"] = s.grid.alpha;
        d["value"] = s.V;
        d["power"] = power;
        return d;
      },
      py::arg("config_json") = "");
}
