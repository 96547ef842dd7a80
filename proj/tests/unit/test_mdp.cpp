#include <doctest.h>

#include <sstream>

#include "ncs/mdp.hpp"

using namespace ncs;
using doctest::Approx;

namespace {
struct ScalarSetup {
  SampledPlant plant;
  FadingChannel channel;
  StateGrid grid;
  ScalarSetup(int nz = 41, int na = 21) {
    ContinuousPlant c{Matrix::Constant(1, 1, -3.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1.0, Vector::Zero(1)};
    plant = discretize(c, 0.05);
    channel = make_channel(5.0, 0.05, 1.0, 4);
    const double dmax = 5.0 * std::sqrt(plant.W(0, 0) / (1.0 - plant.F(0, 0) * plant.F(0, 0)));
    grid = make_grid(dmax, nz, na, 160.0);
  }
  MdpModel model(double lambda) const { return make_model(plant, channel, 1.0, lambda); }
};

TransitionKernel hand_kernel(int nz, const Matrix& fail_next, const Vector& cost) {
  TransitionKernel k;
  for (int z = 0; z < nz; ++z) k.grid.delta.push_back(z);
  k.grid.alpha = {1.0};
  k.grid.alpha_edges = {0.0, 1e300};
  k.grid.power = {0.0};
  k.alpha_next = Matrix::Ones(1, 1);
  k.success = Matrix::Zero(1, 1);
  k.succ_next = Vector::Constant(nz, 1.0 / nz);
  k.fail_next = fail_next;
  k.fail_cost = cost;
  k.lambda = 0.0;
  return k;
}
}  // namespace

TEST_CASE("grid layout") {
  const StateGrid g = make_grid(2.0, 5, 4, 160.0, 2);
  CHECK(g.delta.front() == -2.0);
  CHECK(g.delta.back() == 2.0);
  CHECK(g.power.size() == 4);
  CHECK(g.power.front() == 0.0);
  CHECK(g.power.back() == 160.0);
  // equal-probability bins under Exp(1)
  for (int k = 0; k < g.n_alpha(); ++k) {
    const double hi = k + 1 == g.n_alpha() ? 0.0 : std::exp(-g.alpha_edges[k + 1]);
    CHECK(std::exp(-g.alpha_edges[k]) - hi == Approx(0.25).epsilon(1e-12));
    CHECK(g.alpha[k] > g.alpha_edges[k]);
  }
  CHECK(g.nearest_delta(0.1) == 2);
  CHECK(g.nearest_delta(-9.0) == 0);
  CHECK(g.alpha_bin(0.0) == 0);
  CHECK(g.alpha_bin(100.0) == 3);
  CHECK_THROWS_AS(make_grid(1.0, 2, 1, 1.0), DomainError);
}

TEST_CASE("kernel rows are stochastic and silence never delivers") {
  const ScalarSetup s;
  const TransitionKernel k = build_kernel(s.grid, s.model(2000.0));
  for (int j = 0; j < s.grid.n_alpha(); ++j) CHECK(k.success(0, j) == 0.0);
  for (int z = 0; z < s.grid.n_delta(); z += 5)
    for (int a = 0; a < s.grid.n_alpha(); a += 4)
      for (int p = 0; p < s.grid.n_power(); ++p) {
        const Vector r = k.row(z, a, p);
        CHECK(r.sum() == Approx(1.0).epsilon(1e-12));
        CHECK(r.minCoeff() >= 0.0);
      }
  for (int a = 0; a < s.grid.n_alpha(); ++a) CHECK(k.alpha_next.row(a).sum() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fading transitions preserve the stationary bin mass") {
  const ScalarSetup s;
  const TransitionKernel k = build_kernel(s.grid, s.model(2000.0));
  const Vector uniform = Vector::Constant(s.grid.n_alpha(), 1.0 / s.grid.n_alpha());
  const Vector next = k.alpha_next.transpose() * uniform;
  CHECK((next - uniform).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("degenerate noise-free chain is absorbed at zero") {
  ScalarSetup s;
  s.plant.W.setZero();
  s.plant.w_max = 0.0;
  const TransitionKernel k = build_kernel(s.grid, s.model(1.0));
  const int z0 = s.grid.nearest_delta(0.0);
  const Vector r = k.row(z0, 0, 0);
  CHECK(r.segment(z0 * s.grid.n_alpha(), s.grid.n_alpha()).sum() == Approx(1.0));
}

TEST_CASE("relative value iteration on hand chains") {
  const ViaSolution one = relative_value_iteration(hand_kernel(1, Matrix::Ones(1, 1), Vector::Constant(1, 3.5)));
  CHECK(one.theta == Approx(3.5));
  CHECK(one.V.norm() == Approx(0.0));
  Vector c(2);
  c << 0.0, 2.0;
  const ViaSolution two = relative_value_iteration(hand_kernel(2, Matrix::Constant(2, 2, 0.5), c));
  CHECK(two.theta == Approx(1.0));
  CHECK(evaluate_policy(hand_kernel(2, Matrix::Constant(2, 2, 0.5), c), {0, 0}).avg_cost == Approx(1.0));
  Matrix cyc(2, 2);
  cyc << 0.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(relative_value_iteration(hand_kernel(2, cyc, c), 1e-9, 50), NoConvergence);
}

TEST_CASE("optimal average cost bounds every fixed policy") {
  const ScalarSetup s;
  for (double lambda : {0.1, 10.0, 2000.0}) {
    const TransitionKernel k = build_kernel(s.grid, s.model(lambda));
    const ViaSolution opt = relative_value_iteration(k);
    for (int p = 0; p < s.grid.n_power(); ++p) {
      const std::vector<int> fixed(s.grid.n_delta() * s.grid.n_alpha(), p);
      CHECK(opt.theta <= evaluate_policy(k, fixed).avg_cost * (1.0 + 1e-7));
    }
    const PolicyEvaluation self = evaluate_policy(k, opt.policy);
    CHECK(self.avg_cost == Approx(opt.theta).epsilon(1e-6));
    const ViaSolution fixed_eval = relative_value_iteration(k, opt.policy);
    CHECK(fixed_eval.theta == Approx(opt.theta).epsilon(1e-6));
  }
}

TEST_CASE("transmit region grows as the price falls") {
  const ScalarSetup s(41, 9);
  int prev = -1;
  for (double lambda : {1e4, 100.0, 1.0, 0.01}) {
    const ViaSolution v = relative_value_iteration(build_kernel(s.grid, s.model(lambda)));
    int active = 0;
    for (int z = 0; z < s.grid.n_delta(); ++z)
      for (int a = 0; a < s.grid.n_alpha(); ++a) active += v.power_at(z, a) > 0.0 ? 1 : 0;
    CHECK(active >= prev);
    prev = active;
  }
}

TEST_CASE("error-free baseline") {
  const ScalarSetup s;
  const ViaSolution free = pcefc_solve(s.grid, s.model(0.0));
  for (int z = 0; z < s.grid.n_delta(); ++z) CHECK(free.power_at(z, 0) == 160.0);
  const ViaSolution never = pcefc_solve(s.grid, s.model(1e12));
  for (int z = 0; z < s.grid.n_delta(); ++z) CHECK(never.power_at(z, 0) == 0.0);
  const ViaSolution mid = pcefc_solve(s.grid, s.model(0.05));
  const int z0 = s.grid.nearest_delta(0.0);
  for (int z = z0 + 1; z < s.grid.n_delta(); ++z) {
    CHECK(mid.power_at(z, 0) >= mid.power_at(z - 1, 0));
    CHECK(mid.power_at(2 * z0 - z, 0) == mid.power_at(z, 0));
  }
}

TEST_CASE("i.i.d. innovation baseline") {
  const ScalarSetup s;
  const TransitionKernel k = build_iid_innovation_kernel(s.grid, s.model(2000.0));
  for (int a = 0; a < s.grid.n_alpha(); ++a)
    CHECK(k.alpha_next.row(a).sum() == Approx(1.0).epsilon(1e-12));
  // with the silent action the innovation follows the no-transmit chain
  const TransitionKernel full = build_kernel(s.grid, s.model(2000.0));
  CHECK((k.fail_next - full.fail_next).norm() == 0.0);
  const ViaSolution v = pcicsis_solve(s.grid, s.model(2000.0));
  CHECK(std::isfinite(v.theta));
}

TEST_CASE("csv export") {
  const ScalarSetup s(5, 2);
  const ViaSolution v = relative_value_iteration(build_kernel(s.grid, s.model(1.0)));
  std::ostringstream os;
  write_csv(os, v);
  const std::string out = os.str();
  CHECK(out.rfind("delta,alpha,value,power\n", 0) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 1 + 5 * 2);
}

TEST_CASE("mdp rejects vector plants") {
  ContinuousPlant c{Matrix::Identity(2, 2) * -1.0, Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0,
                    Vector::Zero(2)};
  CHECK_THROWS_AS(make_model(discretize(c, 0.05), make_channel(5.0, 0.05, 1.0, 4), 1.0, 1.0), Unsupported);
}
