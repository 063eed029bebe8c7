#include <gtest/gtest.h>

#include <random>

#include "impedance/qp.hpp"
#include "projected_gradient_oracle.hpp"

using impedance::Box;
using impedance::solve_qp;

namespace {

Eigen::MatrixXd no_rows(Eigen::Index n) { return Eigen::MatrixXd(0, n); }

TEST(SolveQp, UnconstrainedQuadratic) {
  auto r = solve_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1, -1), no_rows(2), Eigen::VectorXd(0));
  EXPECT_NEAR(r.x(0), 1.0, 1e-14);
  EXPECT_NEAR(r.x(1), 1.0, 1e-14);
  EXPECT_TRUE(r.active.empty());
}

TEST(SolveQp, ActiveUpperBound) {
  Eigen::MatrixXd A(1, 1);
  A << 1.0;
  auto r = solve_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, -1.0), A,
                    Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_NEAR(r.x(0), 0.5, 1e-14);
  ASSERT_EQ(r.active.size(), 1u);
  EXPECT_NEAR(r.multipliers(0), 0.5, 1e-12);
  EXPECT_LT(r.kkt_residual, 1e-8);
}

TEST(SolveQp, BoxBounds) {
  Box box{Eigen::Vector2d(-0.25, -1.0), Eigen::Vector2d(0.25, 1.0)};
  auto r = solve_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1, 0.5), no_rows(2), Eigen::VectorXd(0), box);
  EXPECT_NEAR(r.x(0), 0.25, 1e-14);
  EXPECT_NEAR(r.x(1), -0.5, 1e-14);
}

TEST(SolveQp, SingularHessianIsRegularized) {
  // Only x0 appears in the objective; x1 is pinned by a box.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 2);
  H(0, 0) = 2.0;
  Box box{Eigen::Vector2d(-5, 0.2), Eigen::Vector2d(5, 1.0)};
  auto r = solve_qp(H, Eigen::Vector2d(-2, 0), no_rows(2), Eigen::VectorXd(0), box);
  EXPECT_GT(r.regularization, 0.0);
  EXPECT_NEAR(r.x(0), 1.0, 1e-8);
  EXPECT_NEAR(r.x(1), 0.2, 1e-12);
}

TEST(SolveQp, InfeasibleReportsConflictingRows) {
  Eigen::MatrixXd A(2, 1);
  A << 1.0, -1.0;  // x <= 0 and x >= 1
  Eigen::VectorXd b(2);
  b << 0.0, -1.0;
  try {
    solve_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), A, b);
    FAIL() << "expected infeasibility";
  } catch (const impedance::QpInfeasible& e) {
    EXPECT_EQ(e.constraints(), (std::vector<std::size_t>{0, 1}));
  }
}

TEST(SolveQp, DegenerateDuplicateRows) {
  Eigen::MatrixXd A(3, 2);
  A << 1, 1, 1, 1, 2, 2;
  Eigen::VectorXd b(3);
  b << 1, 1, 2;
  auto r = solve_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-2, -2), A, b);
  EXPECT_NEAR(r.x(0), 0.5, 1e-12);
  EXPECT_NEAR(r.x(1), 0.5, 1e-12);
}

TEST(SolveQp, DeterministicAcrossCalls) {
  std::mt19937_64 rng(11);
  auto q = oracle::random_qp(rng);
  Box box{q.lower, q.upper};
  auto a = solve_qp(q.H, q.g, q.A, q.b, box);
  auto b = solve_qp(q.H, q.g, q.A, q.b, box);
  EXPECT_EQ(a.x, b.x);
}

TEST(SolveQp, MatchesProjectedGradientOracleOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 100; ++k) {
    auto q = oracle::random_qp(rng);
    auto r = solve_qp(q.H, q.g, q.A, q.b, Box{q.lower, q.upper});
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    oracle::stack_box(q, A, b);
    auto ref = oracle::projected_gradient_qp(q.H, q.g, A, b);
    ASSERT_LT(ref.iterations, 2'000'000) << "oracle did not converge on instance " << k;
    const double scale = std::max(1.0, std::abs(ref.dual_value));
    EXPECT_LE(std::abs(r.objective - ref.dual_value) / scale, 1e-6) << "instance " << k;
    EXPECT_LT(r.kkt_residual, 1e-8) << "instance " << k;
    EXPECT_LT(r.max_violation, 1e-10) << "instance " << k;
  }
}

}  // namespace
