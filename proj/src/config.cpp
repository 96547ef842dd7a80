#include "ncs/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace ncs {

using nlohmann::json;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

Matrix matrix_from_json(const json& j, const std::string& key) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(key + ": expected a number or a non-empty array");
  if (j[0].is_number()) {
    // A flat array is read as a diagonal.
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v.asDiagonal();
  }
  const size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(key + ": ragged matrix");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& key) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError(key + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

bool symmetric_pd(const Matrix& m) {
  if (m.rows() != m.cols() || !m.isApprox(m.transpose())) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

SimConfig benchmark_config() {
  SimConfig c;
  c.F_tilde.resize(2, 2);
  c.F_tilde << -1.0, -2.0, 3.0, -4.0;
  c.G_tilde = diag({2.0, 1.0});
  c.W_tilde = diag({1.0, 1.0});
  c.x0 = Vector::Zero(2);
  c.Q = diag({1.0, 1.0});
  c.D = diag({1.0, 2.0});
  c.S = diag({1.0, 1.0});
  return c;
}

SimConfig scalar_config() {
  SimConfig c;
  c.F_tilde = diag({-3.0});
  c.G_tilde = diag({1.0});
  c.W_tilde = diag({1.0});
  c.x0 = Vector::Zero(1);
  c.Q = diag({1.0});
  c.D = diag({1.0});
  c.S = diag({1.0});
  c.lambda = 2000.0;
  c.eta_th = 0.43;
  return c;
}

void validate(const SimConfig& c) {
  const Eigen::Index d = c.F_tilde.rows();
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (d == 0 || c.F_tilde.cols() != d) fail("F_tilde must be square");
  if (c.G_tilde.rows() != d) fail("G_tilde must have as many rows as F_tilde");
  if (c.W_tilde.rows() != d || c.W_tilde.cols() != d) fail("W_tilde must match F_tilde");
  if (!c.W_tilde.isApprox(c.W_tilde.transpose()) ||
      Eigen::SelfAdjointEigenSolver<Matrix>(c.W_tilde).eigenvalues().minCoeff() < -1e-12)
    fail("W_tilde must be symmetric PSD");
  if (c.x0.size() != d) fail("x0 must have the plant dimension");
  if (c.Q.rows() != d || c.Q.cols() != d) fail("Q must match F_tilde");
  if (c.D.rows() != c.G_tilde.cols() || !symmetric_pd(c.D)) fail("D must be symmetric PD and match the input size");
  if (c.S.rows() != d || !symmetric_pd(c.S)) fail("S must be symmetric PD and match F_tilde");
  if (!(c.w_tilde_max > 0.0)) fail("w_tilde_max must be positive");
  if (!(c.L0 >= c.x0.norm())) fail("L0 must bound the initial state norm");
  if (!(c.a_tilde > 0.0) || !(c.B_W > 0.0) || !(c.tau > 0.0) || !(c.p_max > 0.0)) fail("channel parameters must be positive");
  if (c.R < static_cast<int>(d) || c.R > 30) fail("R must give every state coordinate at least one bit");
  if (!(c.lambda > 0.0)) fail("lambda must be positive");
  if (!(c.eta_th > 0.0)) fail("eta_th must be positive");
  if (c.p0 < 0.0 || c.p0 > c.p_max) fail("p0 must lie in [0, p_max]");
  if (c.horizon <= 0 || c.effective_burn_in() >= c.horizon) fail("horizon must exceed burn_in");
  if (c.trials < 1 || c.probe_trials < 1) fail("trial counts must be positive");
  static const std::set<std::string> known{"proposed", "fpc", "copc", "pcefc", "pcicsis", "via"};
  if (!known.count(c.policy)) fail("unknown policy '" + c.policy + "'");
  for (const auto& p : c.policies)
    if (!known.count(p)) fail("unknown policy '" + p + "'");
  if (c.via_delta_points < 3 || c.via_alpha_bins < 1 || c.via_power_levels < 0) fail("invalid VIA grid");
  if (!(c.power_tol_db > 0.0)) fail("power_tol_db must be positive");
}

SimConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  SimConfig c = benchmark_config();
  if (j.contains("preset")) {
    const auto name = j["preset"].get<std::string>();
    if (name == "scalar")
      c = scalar_config();
    else if (name != "benchmark")
      throw ConfigError("unknown preset '" + name + "'");
  }
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      else if (key == "F_tilde") c.F_tilde = matrix_from_json(v, key);
      else if (key == "G_tilde") c.G_tilde = matrix_from_json(v, key);
      else if (key == "W_tilde") c.W_tilde = matrix_from_json(v, key);
      else if (key == "w_tilde_max") c.w_tilde_max = v.get<double>();
      else if (key == "x0") c.x0 = vector_from_json(v, key);
      else if (key == "L0") c.L0 = v.get<double>();
      else if (key == "Q") c.Q = matrix_from_json(v, key);
      else if (key == "D") c.D = matrix_from_json(v, key);
      else if (key == "S") c.S = matrix_from_json(v, key);
      else if (key == "a_tilde") c.a_tilde = v.get<double>();
      else if (key == "B_W") c.B_W = v.get<double>();
      else if (key == "R") c.R = v.get<int>();
      else if (key == "p_max") c.p_max = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "policy") c.policy = v.get<std::string>();
      else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "eta_th") c.eta_th = v.get<double>();
      else if (key == "p0") c.p0 = v.get<double>();
      else if (key == "p0_db") c.p0 = std::pow(10.0, v.get<double>() / 10.0);
      else if (key == "horizon") c.horizon = v.get<long>();
      else if (key == "burn_in") c.burn_in = v.get<long>();
      else if (key == "trials") c.trials = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "via_delta_max") c.via_delta_max = v.get<double>();
      else if (key == "via_delta_points") c.via_delta_points = v.get<int>();
      else if (key == "via_alpha_bins") c.via_alpha_bins = v.get<int>();
      else if (key == "via_power_levels") c.via_power_levels = v.get<int>();
      else if (key == "power_target_db") c.power_target_db = v.get<double>();
      else if (key == "power_tol_db") c.power_tol_db = v.get<double>();
      else if (key == "probe_trials") c.probe_trials = v.get<int>();
      else if (key == "eta_grid") c.eta_grid = v.get<std::vector<double>>();
      else if (key == "lambda_grid") c.lambda_grid = v.get<std::vector<double>>();
      else if (key == "policies") c.policies = v.get<std::vector<std::string>>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config value: ") + e.what());
  }
  if (c.x0.size() != c.F_tilde.rows() && !j.contains("x0")) c.x0 = Vector::Zero(c.F_tilde.rows());
  validate(c);
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cannot parse ") + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const SimConfig& c) {
  return json{{"F_tilde", matrix_to_json(c.F_tilde)},
              {"G_tilde", matrix_to_json(c.G_tilde)},
              {"W_tilde", matrix_to_json(c.W_tilde)},
              {"w_tilde_max", c.w_tilde_max},
              {"x0", vector_to_json(c.x0)},
              {"L0", c.L0},
              {"Q", matrix_to_json(c.Q)},
              {"D", matrix_to_json(c.D)},
              {"S", matrix_to_json(c.S)},
              {"a_tilde", c.a_tilde},
              {"B_W", c.B_W},
              {"R", c.R},
              {"p_max", c.p_max},
              {"tau", c.tau},
              {"policy", c.policy},
              {"lambda", c.lambda},
              {"eta_th", c.eta_th},
              {"p0", c.p0},
              {"horizon", c.horizon},
              {"burn_in", c.burn_in},
              {"trials", c.trials},
              {"seed", c.seed},
              {"via_delta_max", c.via_delta_max},
              {"via_delta_points", c.via_delta_points},
              {"via_alpha_bins", c.via_alpha_bins},
              {"via_power_levels", c.via_power_levels},
              {"power_target_db", c.power_target_db},
              {"power_tol_db", c.power_tol_db},
              {"probe_trials", c.probe_trials},
              {"eta_grid", c.eta_grid},
              {"lambda_grid", c.lambda_grid},
              {"policies", c.policies}};
}

}  // namespace ncs
