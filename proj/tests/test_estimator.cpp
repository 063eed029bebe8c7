#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "impedance/estimator.hpp"
#include "impedance/gait_data.hpp"
#include "impedance/reference_sets.hpp"
#include "support/random_params.hpp"

using namespace impedance;

namespace {

GaitCycleData kinematics(std::size_t n = 201) {
  std::vector<double> t(n), a(n), v(n), z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    a[i] = 0.3 * std::sin(2 * M_PI * t[i]) + 0.1 * std::cos(6 * M_PI * t[i]);
    v[i] = 0.6 * M_PI * std::cos(2 * M_PI * t[i]) - 0.6 * M_PI * std::sin(6 * M_PI * t[i]);
  }
  t.back() = 1.0;
  return GaitCycleData(t, a, v, z);
}

ImpedanceParameters truth() {
  return ImpedanceParameters(ImpedanceProfile({50.0, 200.0, -150.0}), ImpedanceProfile({2.0, -1.0}),
                             EquilibriumSchedule({0.0, 0.40, 0.63, 1.0}, {-0.05, 0.1, 0.02}, "B"));
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

TEST(FitCost, EuclideanNormOverWindow) {
  auto k = kinematics(11);
  ImpedanceParameters zero(ImpedanceProfile({0.0}), ImpedanceProfile({0.0}), EquilibriumSchedule({0.0, 1.0}, {0.0}));
  std::vector<double> tau(11, 0.0);
  tau[0] = 3.0;
  tau[10] = 4.0;
  auto d = k.with_torque(tau);
  EXPECT_DOUBLE_EQ(fit_cost(zero, d), 5.0);
  EXPECT_DOUBLE_EQ(fit_cost(zero, d, {0.0, 0.5}), 3.0);
  EXPECT_THROW(fit_cost(zero, d, {0.01, 0.05}), DomainError);
}

TEST(Lipschitz, MarginOfLine) {
  std::vector<double> tau{0.0, 1.0, 2.0}, t{0.0, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(lipschitz_margin(tau, t, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(lipschitz_margin(tau, t, 3.0), -1.0);
}

TEST(BuildProblem, DefaultsAndChecks) {
  auto d = synthesize({truth(), kinematics(), 0.0, 0});
  auto p = build_problem(d, {{0.0, 0.40, 0.63, 1.0}, "B"});
  EXPECT_EQ(p.stiffness_order, 4);
  EXPECT_EQ(p.damping_order, 4);
  EXPECT_EQ(p.angle_bounds.size(), 3u);
  EXPECT_EQ(p.angle_bounds[0].lo, -0.5);
  EXPECT_GT(p.lipschitz_c, 0.0);
  EXPECT_LE(lipschitz_margin(d.torque(), d.phase(), p.lipschitz_c), 0.0);

  ProblemOptions bad;
  bad.fit_window = {0.7, 0.2};
  EXPECT_THROW(build_problem(d, {{0.0, 1.0}}, bad), DomainError);
  ProblemOptions bounds;
  bounds.angle_bounds = {{0.0, 1.0}};
  EXPECT_THROW(build_problem(d, {{0.0, 0.5, 1.0}}, bounds), DomainError);
  EXPECT_THROW(build_problem(d, {{0.0, 0.5, 0.4, 1.0}}), InvariantError);
}

TEST(Solve, RecoversNoiseFreeTorque) {
  auto d = synthesize({truth(), kinematics(), 0.0, 0});
  auto prob = build_problem(d, {{0.0, 0.40, 0.63, 1.0}, "B"});
  auto r = multi_start(prob, 4, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.feasible());
  const auto tau = torque_trajectory(r.params, d);
  double err = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) err = std::max(err, std::abs(tau[i] - d.torque()[i]));
  EXPECT_LT(err, 1e-6 * max_abs(d.torque()));
  EXPECT_EQ(r.params.schedule.label(), "B");
}

TEST(Solve, TraceIsNonIncreasing) {
  auto d = synthesize({truth(), kinematics(), 0.3, 5});
  auto prob = build_problem(d, {{0.0, 0.40, 0.63, 1.0}, "B"});
  auto r = solve(prob, std::nullopt, 3);
  ASSERT_FALSE(r.solver_trace.empty());
  for (std::size_t i = 1; i < r.solver_trace.size(); ++i)
    EXPECT_LE(r.solver_trace[i].cost, r.solver_trace[i - 1].cost);
  EXPECT_EQ(r.cost, r.solver_trace.back().cost);
  EXPECT_NEAR(r.cost, fit_cost(r.params, d), 1e-9 * r.cost);
}

TEST(Solve, AnglesRespectBounds) {
  auto d = synthesize({truth(), kinematics(), 0.0, 0});
  ProblemOptions opt;
  opt.angle_bounds = {{0.0, 0.01}, {0.0, 0.01}, {0.0, 0.01}};
  auto r = solve(build_problem(d, {{0.0, 0.40, 0.63, 1.0}}, opt), std::nullopt, 0);
  for (double a : r.params.schedule.angles()) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 0.01);
  }
  EXPECT_TRUE(r.feasible());
}

TEST(Solve, DeterministicInSeed) {
  auto d = synthesize({truth(), kinematics(), 0.3, 5});
  auto prob = build_problem(d, {{0.0, 0.40, 0.63, 1.0}});
  auto a = solve(prob, std::nullopt, 11);
  auto b = solve(prob, std::nullopt, 11);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.cost, b.cost);
}

TEST(Solve, WarmStartFromTruth) {
  auto d = synthesize({truth(), kinematics(), 0.0, 0});
  auto r = solve(build_problem(d, {{0.0, 0.40, 0.63, 1.0}}), truth(), 0);
  EXPECT_LT(r.cost, 1e-9);
  EXPECT_TRUE(r.converged);
}

TEST(MultiStart, ParallelMatchesSerial) {
  auto d = synthesize({truth(), kinematics(), 0.3, 5});
  auto prob = build_problem(d, {{0.0, 0.40, 0.63, 1.0}});
  auto a = multi_start(prob, 4, 2, true);
  auto b = multi_start(prob, 4, 2, false);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.start_index, b.start_index);
  EXPECT_EQ(a.seed, 2 + a.start_index);
  EXPECT_THROW(multi_start(prob, 0), DomainError);
}

TEST(OrderSweep, CostNonIncreasingInOrder) {
  auto d = synthesize({truth(), kinematics(), 0.5, 9});
  auto prob = build_problem(d, {{0.0, 0.40, 0.63, 1.0}});
  const std::vector<int> orders{0, 1, 2, 3};
  auto rs = order_sweep(prob, orders, 2, 0);
  ASSERT_EQ(rs.size(), 4u);
  for (std::size_t i = 1; i < rs.size(); ++i) EXPECT_LE(rs[i].cost, rs[i - 1].cost * (1 + 1e-12));
  EXPECT_EQ(rs[2].params.stiffness.order(), 2);
}

TEST(Solve, FitWindowIgnoresOutsideSamples) {
  auto d = synthesize({truth(), kinematics(), 0.0, 0});
  auto tau = d.torque();
  for (std::size_t i = 0; i < tau.size(); ++i)
    if (d.phase()[i] > 0.63) tau[i] += 100.0;  // swing garbage
  auto dirty = d.with_torque(tau);
  ProblemOptions opt;
  opt.fit_window = {0.0, 0.63};
  auto r = multi_start(build_problem(dirty, {{0.0, 0.40, 0.63, 1.0}}, opt), 4, 0);
  EXPECT_LT(r.cost, 1e-6 * max_abs(d.torque()));
  EXPECT_NEAR(r.cost, fit_cost(r.params, dirty, opt.fit_window), 1e-9);
}

TEST(Solve, RandomRoundTripsSmall) {
  std::mt19937_64 rng(1234);
  auto k = kinematics();
  for (char label : {'A', 'C', 'D'}) {
    auto p = testsupport::random_parameters(rng, reference::set(label).boundaries);
    auto d = synthesize({p, k, 0.0, 0});
    auto r = multi_start(build_problem(d, {reference::set(label).boundaries}), 8, 0);
    const auto tau = torque_trajectory(r.params, d);
    double rmse = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) rmse += std::pow(tau[i] - d.torque()[i], 2);
    rmse = std::sqrt(rmse / tau.size());
    EXPECT_LT(rmse, 1e-4 * max_abs(d.torque())) << label;
  }
}

}  // namespace
