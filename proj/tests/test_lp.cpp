#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "chainscale/lp.hpp"
#include "support/oracles.hpp"

using namespace chainscale;

TEST(Lp, SingleBound) {
  LpModel m;
  m.add_var("x", 3.0, kInf, 1.0);
  const auto s = solve(m);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.point[0], 3.0, 1e-9);
  EXPECT_NEAR(s.objective_value, 3.0, 1e-9);
}

TEST(Lp, SimplexEdge) {
  LpModel m;
  const int x = m.add_var("x", 0, kInf, 1.0), y = m.add_var("y", 0, kInf, 1.0);
  m.add_row("sum", {{x, 1.0}, {y, 1.0}}, Relation::Eq, 1.0);
  const auto s = solve(m);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective_value, 1.0, 1e-9);
  EXPECT_NEAR(s.point[x] + s.point[y], 1.0, 1e-9);
}

TEST(Lp, Infeasible) {
  LpModel m;
  const int x = m.add_var("x", -kInf, kInf, 0.0);
  m.add_row("le", {{x, 1.0}}, Relation::Le, 1.0);
  m.add_row("ge", {{x, 1.0}}, Relation::Ge, 2.0);
  EXPECT_EQ(solve(m).status, LpStatus::Infeasible);
}

TEST(Lp, Unbounded) {
  LpModel m;
  const int x = m.add_var("x", 0, kInf, -1.0);
  m.add_row("r", {{x, 1.0}}, Relation::Ge, 1.0);
  EXPECT_EQ(solve(m).status, LpStatus::Unbounded);
}

TEST(Lp, FreeAndBoxedVariables) {
  LpModel m;
  const int x = m.add_var("x", -kInf, kInf, 1.0), y = m.add_var("y", -2.0, 5.0, -0.5);
  m.add_row("r", {{x, 1.0}, {y, -1.0}}, Relation::Ge, -1.0);
  const auto s = solve(m);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.point[y], -2.0, 1e-9);
  EXPECT_NEAR(s.point[x], -3.0, 1e-9);
  EXPECT_NEAR(s.objective_value, -2.0, 1e-9);
}

TEST(Lp, ObjectiveConstant) {
  LpModel m;
  m.add_var("x", 1.0, 2.0, 2.0);
  m.set_objective_constant(10.0);
  EXPECT_NEAR(solve(m).objective_value, 12.0, 1e-9);
}

TEST(Lp, ValidateRejectsBadModels) {
  LpModel m;
  m.add_var("x");
  m.add_row("r", {{3, 1.0}}, Relation::Eq, 0.0);
  EXPECT_THROW(m.validate(), std::invalid_argument);
  LpModel box;
  box.add_var("x", 2.0, 1.0);
  EXPECT_THROW(box.validate(), std::invalid_argument);
}

TEST(Feasibility, RowViolations) {
  LpModel m;
  const int x = m.add_var("x");
  m.add_row("fix", {{x, 1.0}}, Relation::Eq, 1.0);
  Eigen::VectorXd p(1);
  p << 1.0;
  EXPECT_TRUE(check_feasibility(m, p).feasible());
  p << 1.5;
  const auto rep = check_feasibility(m, p);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_NEAR(rep.rows[0].amount, 0.5, 1e-12);
  p << -1.0;
  EXPECT_FALSE(check_feasibility(m, p).bounds.empty());
}

namespace {

struct RandomLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b, c;
};

// min c'x, A x >= b, x >= 0 with c >= 0, so the optimum is finite, and b
// chosen so the origin shifted by a positive point is feasible.
RandomLp random_lp(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.1, 2.0);
  RandomLp lp{Eigen::MatrixXd(m, n), Eigen::VectorXd(m), Eigen::VectorXd(n)};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) lp.A(i, j) = U(rng);
  }
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) {
    x0[j] = P(rng);
    lp.c[j] = P(rng);
  }
  lp.b = lp.A * x0 - Eigen::VectorXd::NullaryExpr(m, [&] { return P(rng); });
  return lp;
}

LpModel primal(const RandomLp& r, const std::vector<int>& row_order) {
  LpModel m;
  for (int j = 0; j < r.c.size(); ++j) m.add_var("x" + std::to_string(j), 0, kInf, r.c[j]);
  for (int i : row_order) {
    SparseTerms t;
    for (int j = 0; j < r.c.size(); ++j) t.emplace_back(j, r.A(i, j));
    m.add_row("r" + std::to_string(i), t, Relation::Ge, r.b[i]);
  }
  return m;
}

// max b'y, A'y <= c, y >= 0, written as a minimization of -b'y.
LpModel dual(const RandomLp& r) {
  LpModel m;
  for (int i = 0; i < r.b.size(); ++i) m.add_var("y" + std::to_string(i), 0, kInf, -r.b[i]);
  for (int j = 0; j < r.c.size(); ++j) {
    SparseTerms t;
    for (int i = 0; i < r.b.size(); ++i) t.emplace_back(i, r.A(i, j));
    m.add_row("c" + std::to_string(j), t, Relation::Le, r.c[j]);
  }
  return m;
}

}  // namespace

TEST(LpDuality, PrimalMatchesIndependentDual) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const RandomLp r = random_lp(rng, 4 + trial % 5, 3 + trial % 6);
    std::vector<int> order(static_cast<std::size_t>(r.b.size()));
    std::iota(order.begin(), order.end(), 0);
    const auto p = solve(primal(r, order));
    const auto d = solve(dual(r));
    ASSERT_TRUE(p.optimal());
    ASSERT_TRUE(d.optimal());
    const double dual_value = -d.objective_value;
    EXPECT_NEAR(p.objective_value, dual_value, 1e-7 * std::max(1.0, std::abs(dual_value)));
    // Weak duality: every primal feasible point sits above every dual feasible point.
    EXPECT_GE(r.c.dot(p.point) + 1e-9, r.b.dot(d.point));
    EXPECT_TRUE(check_feasibility(primal(r, order), p.point, 1e-7).feasible());
  }
}

TEST(LpDuality, RowPermutationInvariance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomLp r = random_lp(rng, 6, 5);
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    const double base = solve(primal(r, order)).objective_value;
    std::shuffle(order.begin(), order.end(), rng);
    EXPECT_NEAR(solve(primal(r, order)).objective_value, base, 1e-8 * std::max(1.0, std::abs(base)));
  }
}

TEST(Lp, Deterministic) {
  std::mt19937_64 rng(3);
  const RandomLp r = random_lp(rng, 8, 8);
  std::vector<int> order(8);
  std::iota(order.begin(), order.end(), 0);
  const auto a = solve(primal(r, order)), b = solve(primal(r, order));
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Lp, OverloadModelSelfConsistent) {
  const auto p = oracle::fat4_problem({2, 5}, 1, 4, oracle::pm_range(1, 16), 1.2, 360, 4, ScalingMode::Overload);
  const auto rm = build_overload_lp(p);
  const auto s = solve(rm.lp);
  ASSERT_TRUE(s.optimal());
  EXPECT_TRUE(check_feasibility(rm.lp, s.point, 1e-7).feasible());
}

TEST(Lp, DeadlineInThePastThrows) {
  const auto p = oracle::case4_overload();
  const auto rm = build_overload_lp(p);
  EXPECT_THROW(solve(rm.lp, kDefaultLpTolerance, std::chrono::steady_clock::now() - std::chrono::seconds(1)),
               TimeLimitExceeded);
}

TEST(Lp, LpFormatMentionsEveryRow) {
  LpModel m;
  const int x = m.add_var("x", 0, 4, 1.0);
  m.add_row("cap", {{x, 1.0}}, Relation::Le, 3.0);
  const std::string text = to_lp_format(m);
  EXPECT_NE(text.find("cap"), std::string::npos);
  EXPECT_NE(text.find("Minimize"), std::string::npos);
}
