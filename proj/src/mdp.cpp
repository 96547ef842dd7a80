#include "ncs/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/distributions/non_central_chi_squared.hpp>

namespace ncs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Cell boundaries of a sorted grid, outer cells open to infinity.
std::vector<double> cell_edges(const std::vector<double>& z) {
  std::vector<double> e(z.size() + 1);
  e.front() = -kInf;
  e.back() = kInf;
  for (size_t k = 1; k < z.size(); ++k) e[k] = 0.5 * (z[k - 1] + z[k]);
  return e;
}

// Law of center + w on the grid cells, w the truncated disturbance.
Vector shifted_disturbance_law(const std::vector<double>& edges, double center, const MdpModel& m) {
  const int n = static_cast<int>(edges.size()) - 1;
  Vector out = Vector::Zero(n);
  const double sd = std::sqrt(m.inflation * m.W);
  if (sd == 0.0 || m.w_max == 0.0) {
    for (int k = 0; k < n; ++k)
      if (center >= edges[k] && center < edges[k + 1]) out(k) = 1.0;
    if (out.sum() == 0.0) out(n - 1) = 1.0;
    return out;
  }
  const double lo_c = normal_cdf(-m.w_max / sd), hi_c = normal_cdf(m.w_max / sd);
  auto cdf = [&](double x) {
    if (x <= -m.w_max) return 0.0;
    if (x >= m.w_max) return 1.0;
    return (normal_cdf(x / sd) - lo_c) / (hi_c - lo_c);
  };
  for (int k = 0; k < n; ++k) out(k) = cdf(edges[k + 1] - center) - cdf(edges[k] - center);
  return out / out.sum();
}

Vector uniform_law(const std::vector<double>& edges, double half) {
  const int n = static_cast<int>(edges.size()) - 1;
  Vector out = Vector::Zero(n);
  if (half <= 0.0) {
    for (int k = 0; k < n; ++k)
      if (0.0 >= edges[k] && 0.0 < edges[k + 1]) out(k) = 1.0;
    return out;
  }
  for (int k = 0; k < n; ++k) {
    const double lo = std::max(edges[k], -half), hi = std::min(edges[k + 1], half);
    if (hi > lo) out(k) = (hi - lo) / (2.0 * half);
  }
  return out / out.sum();
}

// Pr(alpha' in bin j | alpha in bin i) under the stationary AR(1) fading law.
Matrix fading_transitions(const StateGrid& g, const FadingChannel& c) {
  const int n = g.n_alpha();
  Matrix T = Matrix::Zero(n, n);
  constexpr int kNodes = 64;
  for (int i = 0; i < n; ++i) {
    const double u0 = 1.0 - std::exp(-g.alpha_edges[i]);
    const double u1 = std::isinf(g.alpha_edges[i + 1]) ? 1.0 : 1.0 - std::exp(-g.alpha_edges[i + 1]);
    for (int q = 0; q < kNodes; ++q) {
      const double u = u0 + (u1 - u0) * (q + 0.5) / kNodes;
      const double alpha = -std::log1p(-u);
      const double nc = 2.0 * c.a * c.a * alpha / c.Z;
      boost::math::non_central_chi_squared dist(2.0, nc);
      double prev = 0.0;
      for (int j = 0; j < n; ++j) {
        const double edge = g.alpha_edges[j + 1];
        const double cur = std::isinf(edge) ? 1.0 : boost::math::cdf(dist, 2.0 * edge / c.Z);
        T(i, j) += std::max(0.0, cur - prev);
        prev = cur;
      }
    }
    T.row(i) /= T.row(i).sum();
  }
  return T;
}

// Bin average of 1 - exp(-k alpha) under the Exp(1) density.
double mean_success(double k, double lo, double hi) {
  const double mass = std::exp(-lo) - (std::isinf(hi) ? 0.0 : std::exp(-hi));
  const double tail = (std::exp(-(1.0 + k) * lo) - (std::isinf(hi) ? 0.0 : std::exp(-(1.0 + k) * hi))) / (1.0 + k);
  return 1.0 - tail / mass;
}

Matrix success_table(const StateGrid& g, const FadingChannel& c) {
  Matrix s(g.n_power(), g.n_alpha());
  for (int p = 0; p < g.n_power(); ++p)
    for (int j = 0; j < g.n_alpha(); ++j) {
      const double k = g.power[p] * c.tau / (c.kappa * c.B_W);
      s(p, j) = k == 0.0 ? 0.0 : mean_success(k, g.alpha_edges[j], g.alpha_edges[j + 1]);
    }
  return s;
}

Vector squared_grid(const StateGrid& g, double S) {
  Vector v(g.n_delta());
  for (int k = 0; k < g.n_delta(); ++k) v(k) = S * g.delta[k] * g.delta[k];
  return v;
}

void require_scalar(const MdpModel& m) {
  if (!std::isfinite(m.F) || !std::isfinite(m.W)) throw DomainError("mdp: non-finite model");
}

}  // namespace

int StateGrid::nearest_delta(double d) const {
  const auto it = std::lower_bound(delta.begin(), delta.end(), d);
  if (it == delta.begin()) return 0;
  if (it == delta.end()) return n_delta() - 1;
  const int k = static_cast<int>(it - delta.begin());
  return (d - delta[k - 1] <= delta[k] - d) ? k - 1 : k;
}

int StateGrid::alpha_bin(double a) const {
  const auto it = std::upper_bound(alpha_edges.begin(), alpha_edges.end(), a);
  const int k = static_cast<int>(it - alpha_edges.begin()) - 1;
  return std::clamp(k, 0, n_alpha() - 1);
}

StateGrid make_grid(double delta_max, int n_delta, int n_alpha, double p_max, int n_intermediate) {
  if (n_delta < 3 || n_alpha < 1 || !(delta_max > 0.0) || !(p_max > 0.0) || n_intermediate < 0)
    throw DomainError("make_grid: invalid grid parameters");
  StateGrid g;
  for (int k = 0; k < n_delta; ++k) g.delta.push_back(-delta_max + 2.0 * delta_max * k / (n_delta - 1));
  for (int k = 0; k <= n_alpha; ++k) g.alpha_edges.push_back(k == n_alpha ? kInf : -std::log1p(-double(k) / n_alpha));
  for (int k = 0; k < n_alpha; ++k) {
    const double lo = g.alpha_edges[k], hi = g.alpha_edges[k + 1];
    const double mass = std::exp(-lo) - (std::isinf(hi) ? 0.0 : std::exp(-hi));
    const double first = (lo + 1.0) * std::exp(-lo) - (std::isinf(hi) ? 0.0 : (hi + 1.0) * std::exp(-hi));
    g.alpha.push_back(first / mass);
  }
  for (int k = 0; k <= n_intermediate + 1; ++k) g.power.push_back(p_max * k / (n_intermediate + 1));
  return g;
}

MdpModel make_model(const SampledPlant& plant, const FadingChannel& channel, double S, double lambda) {
  if (plant.F.rows() != 1) throw Unsupported("mdp: only scalar plants are supported");
  MdpModel m;
  m.F = plant.F(0, 0);
  m.W = plant.W(0, 0);
  m.w_max = plant.w_max;
  m.inflation = plant.inflation;
  m.S = S;
  m.lambda = lambda;
  m.channel = channel;
  const double shrink = std::abs(m.F) * std::ldexp(1.0, -channel.rate_bits);
  if (shrink >= 1.0) throw DomainError("make_model: quantizer range has no steady state");
  const double range = m.w_max / (1.0 - shrink);
  m.quant_halfwidth = range * std::ldexp(1.0, 1 - channel.rate_bits);
  return m;
}

Vector TransitionKernel::row(int iz, int ia, int ip) const {
  const int nz = grid.n_delta(), na = grid.n_alpha();
  Vector out = Vector::Zero(nz * na);
  for (int j = 0; j < na; ++j) {
    const double s = success(ip, j);
    for (int z = 0; z < nz; ++z)
      out(z * na + j) += alpha_next(ia, j) * (s * succ_next(z) + (1.0 - s) * fail_next(iz, z));
  }
  return out;
}

double TransitionKernel::stage_cost(int iz, int ia, int ip) const {
  double c = lambda * grid.power[ip];
  for (int j = 0; j < grid.n_alpha(); ++j) {
    const double s = success(ip, j);
    c += alpha_next(ia, j) * (s * succ_cost + (1.0 - s) * fail_cost(iz));
  }
  return c;
}

TransitionKernel build_kernel(const StateGrid& grid, const MdpModel& m) {
  require_scalar(m);
  TransitionKernel k;
  k.grid = grid;
  k.lambda = m.lambda;
  k.S = m.S;
  const auto edges = cell_edges(grid.delta);
  const int nz = grid.n_delta();
  k.alpha_next = fading_transitions(grid, m.channel);
  k.success = success_table(grid, m.channel);
  k.succ_next = uniform_law(edges, m.quant_halfwidth);
  k.fail_next.resize(nz, nz);
  for (int z = 0; z < nz; ++z) k.fail_next.row(z) = shifted_disturbance_law(edges, m.F * grid.delta[z], m).transpose();
  const Vector sq = squared_grid(grid, m.S);
  k.succ_cost = k.succ_next.dot(sq);
  k.fail_cost = k.fail_next * sq;
  return k;
}

TransitionKernel build_iid_innovation_kernel(const StateGrid& grid, const MdpModel& m) {
  require_scalar(m);
  TransitionKernel k;
  k.grid = grid;
  k.lambda = m.lambda;
  k.S = m.S;
  const auto edges = cell_edges(grid.delta);
  const int nz = grid.n_delta(), na = grid.n_alpha();
  k.alpha_next = Matrix::Constant(na, na, 1.0 / na);
  k.success = success_table(grid, m.channel);
  k.fail_next.resize(nz, nz);
  for (int z = 0; z < nz; ++z) k.fail_next.row(z) = shifted_disturbance_law(edges, m.F * grid.delta[z], m).transpose();
  // Next innovation after a delivery is F q + w with q uniform quantization noise.
  constexpr int kNodes = 64;
  k.succ_next = Vector::Zero(nz);
  for (int q = 0; q < kNodes; ++q) {
    const double e = m.quant_halfwidth * (-1.0 + 2.0 * (q + 0.5) / kNodes);
    k.succ_next += shifted_disturbance_law(edges, m.F * e, m) / kNodes;
  }
  const Vector sq = squared_grid(grid, m.S);
  k.succ_cost = uniform_law(edges, m.quant_halfwidth).dot(sq);
  k.fail_cost = sq;
  return k;
}

TransitionKernel build_error_free_kernel(const StateGrid& grid, const MdpModel& m) {
  require_scalar(m);
  if (grid.n_alpha() != 1 || grid.n_power() != 2) throw DomainError("build_error_free_kernel: expects one fading bin and two actions");
  TransitionKernel k;
  k.grid = grid;
  k.lambda = m.lambda;
  k.S = m.S;
  const auto edges = cell_edges(grid.delta);
  const int nz = grid.n_delta();
  k.alpha_next = Matrix::Ones(1, 1);
  k.success = Matrix(2, 1);
  k.success << 0.0, 1.0;
  k.succ_next = uniform_law(edges, m.quant_halfwidth);
  k.fail_next.resize(nz, nz);
  for (int z = 0; z < nz; ++z) k.fail_next.row(z) = shifted_disturbance_law(edges, m.F * grid.delta[z], m).transpose();
  const Vector sq = squared_grid(grid, m.S);
  k.succ_cost = k.succ_next.dot(sq);
  k.fail_cost = k.fail_next * sq;
  return k;
}

namespace {

// One Bellman sweep; returns the minimizing action per state when policy is non-null.
Matrix bellman(const TransitionKernel& k, const Matrix& V, std::vector<int>* policy, const std::vector<int>* fixed) {
  const int nz = k.grid.n_delta(), na = k.grid.n_alpha(), np = k.grid.n_power();
  // X(a') = succ_cost + E[V(z', a') | success], Y(z, a') = fail_cost(z) + E[V(z', a') | failure from z]
  const Vector X = (k.succ_next.transpose() * V).transpose().array() + k.succ_cost;
  Matrix Y = k.fail_next * V;
  Y.colwise() += k.fail_cost;

  Matrix out(nz, na);
  for (int z = 0; z < nz; ++z)
    for (int a = 0; a < na; ++a) {
      double base = 0.0;
      for (int j = 0; j < na; ++j) base += k.alpha_next(a, j) * Y(z, j);
      auto value_of = [&](int p) {
        double v = k.lambda * k.grid.power[p] + base;
        for (int j = 0; j < na; ++j) v += k.alpha_next(a, j) * k.success(p, j) * (X(j) - Y(z, j));
        return v;
      };
      if (fixed) {
        out(z, a) = value_of((*fixed)[z * na + a]);
        continue;
      }
      int best = 0;
      double best_v = value_of(0);
      for (int p = 1; p < np; ++p) {
        const double v = value_of(p);
        if (v < best_v) {
          best_v = v;
          best = p;
        }
      }
      out(z, a) = best_v;
      if (policy) (*policy)[z * na + a] = best;
    }
  return out;
}

ViaSolution iterate(const TransitionKernel& k, double tol, int max_iter, const std::vector<int>* fixed) {
  const int nz = k.grid.n_delta(), na = k.grid.n_alpha();
  const int rz = k.grid.nearest_delta(0.0), ra = na / 2;
  ViaSolution s;
  s.grid = k.grid;
  s.policy.assign(nz * na, 0);
  Matrix V = Matrix::Zero(nz, na);
  double span = kInf;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next = bellman(k, V, nullptr, fixed);
    const Matrix diff = next - V;
    const double hi = diff.maxCoeff(), lo = diff.minCoeff();
    span = hi - lo;
    s.theta = 0.5 * (hi + lo);
    next.array() -= next(rz, ra);
    V = std::move(next);
    if (span <= tol * std::max(1.0, std::abs(s.theta))) {
      s.iterations = it;
      s.residual = span;
      s.V = V;
      if (fixed)
        s.policy = *fixed;
      else
        bellman(k, V, &s.policy, nullptr);
      return s;
    }
  }
  throw NoConvergence("relative_value_iteration: span " + std::to_string(span) + " above tolerance");
}

}  // namespace

ViaSolution relative_value_iteration(const TransitionKernel& k, double tol, int max_iter) {
  return iterate(k, tol, max_iter, nullptr);
}

ViaSolution relative_value_iteration(const TransitionKernel& k, const std::vector<int>& policy, double tol,
                                     int max_iter) {
  if (static_cast<int>(policy.size()) != k.grid.n_delta() * k.grid.n_alpha())
    throw DimensionError("relative_value_iteration: policy table has wrong size");
  return iterate(k, tol, max_iter, &policy);
}

PolicyEvaluation evaluate_policy(const TransitionKernel& k, const std::vector<int>& policy) {
  const int nz = k.grid.n_delta(), na = k.grid.n_alpha();
  if (static_cast<int>(policy.size()) != nz * na) throw DimensionError("evaluate_policy: policy table has wrong size");
  Matrix pi = Matrix::Constant(nz, na, 1.0 / (nz * na));
  for (int it = 0; it < 200000; ++it) {
    Matrix fail_mass = Matrix::Zero(nz, na);  // (z, a')
    Vector succ_mass = Vector::Zero(na);
    for (int z = 0; z < nz; ++z)
      for (int a = 0; a < na; ++a) {
        const double m = pi(z, a);
        if (m == 0.0) continue;
        const int p = policy[z * na + a];
        for (int j = 0; j < na; ++j) {
          const double q = m * k.alpha_next(a, j);
          succ_mass(j) += q * k.success(p, j);
          fail_mass(z, j) += q * (1.0 - k.success(p, j));
        }
      }
    Matrix next = k.fail_next.transpose() * fail_mass;
    next += k.succ_next * succ_mass.transpose();
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().sum();
    pi = std::move(next);
    if (change < 1e-14) break;
  }
  PolicyEvaluation ev;
  for (int z = 0; z < nz; ++z)
    for (int a = 0; a < na; ++a) {
      const int p = policy[z * na + a];
      const double c = k.stage_cost(z, a, p);
      const double power = k.grid.power[p];
      ev.avg_cost += pi(z, a) * c;
      ev.avg_power += pi(z, a) * power;
      ev.avg_error += pi(z, a) * (c - k.lambda * power);
    }
  return ev;
}

std::vector<int> tabulate_policy(const StateGrid& grid, const std::function<double(double, double)>& rule) {
  std::vector<int> out(grid.n_delta() * grid.n_alpha());
  for (int z = 0; z < grid.n_delta(); ++z)
    for (int a = 0; a < grid.n_alpha(); ++a) {
      const double p = rule(grid.delta[z], grid.alpha[a]);
      int best = 0;
      for (int q = 1; q < grid.n_power(); ++q)
        if (std::abs(grid.power[q] - p) < std::abs(grid.power[best] - p)) best = q;
      out[z * grid.n_alpha() + a] = best;
    }
  return out;
}

ViaSolution pcefc_solve(const StateGrid& grid, const MdpModel& m) {
  StateGrid g;
  g.delta = grid.delta;
  g.alpha = {1.0};
  g.alpha_edges = {0.0, kInf};
  g.power = {0.0, grid.power.back()};
  return relative_value_iteration(build_error_free_kernel(g, m));
}

ViaSolution pcicsis_solve(const StateGrid& grid, const MdpModel& m) {
  return relative_value_iteration(build_iid_innovation_kernel(grid, m));
}

void write_csv(std::ostream& os, const ViaSolution& s) {
  os << "delta,alpha,value,power\n";
  os.precision(10);
  for (int z = 0; z < s.grid.n_delta(); ++z)
    for (int a = 0; a < s.grid.n_alpha(); ++a)
      os << s.grid.delta[z] << ',' << s.grid.alpha[a] << ',' << s.V(z, a) << ',' << s.power_at(z, a) << '\n';
}

}  // namespace ncs
