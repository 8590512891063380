#include <gtest/gtest.h>

#include <map>

#include "chainscale/scaling_models.hpp"
#include "support/oracles.hpp"

using namespace chainscale;
using oracle::pm_range;
using oracle::fat4_problem;

namespace {

struct Solved {
  ScalingProblem p;
  RelaxedModel rm;
  LpSolution sol;
  ScalingDecision d;
};

Solved solve_case(const ScalingProblem& p, double pre_traffic) {
  Solved s{p, {}, {}, {}};
  s.rm = p.mode == ScalingMode::Overload ? build_overload_lp(p) : build_underload_lp(p);
  s.sol = solve(s.rm.lp);
  EXPECT_TRUE(s.sol.optimal());
  s.d = decode(s.sol, s.rm, p, baseline_forwarding_cost(p, pre_traffic));
  return s;
}

std::vector<int> one_based(std::vector<int> v) {
  for (int& x : v) ++x;
  return v;
}

double conservation_residual(const Solved& s) { return oracle::conservation_residual(s.p, s.rm, s.sol.point); }

struct Row {
  const char* name;
  std::vector<int> hosts;
  int egress;
  std::vector<int> candidates;
  double gamma, pre, traffic;
  int v_star;
  ScalingMode mode;
};

std::vector<Row> corpus() {
  const auto all = pm_range(1, 16), from3 = pm_range(3, 16), from2 = pm_range(2, 16);
  const auto O = ScalingMode::Overload, U = ScalingMode::Underload;
  return {
      {"s1v3", {2, 5}, 4, all, 1.2, 160, 240, 3, O},       {"s1v4", {2, 5}, 4, all, 1.2, 160, 360, 4, O},
      {"s1u", {2, 5}, 4, {}, 1.2, 160, 80, 1, U},          {"s2v4", {1, 2, 3}, 16, from3, 0.6, 210, 315, 4, O},
      {"s2v5", {1, 2, 3}, 16, from3, 0.6, 210, 472.5, 5, O}, {"s2u2", {1, 2, 3}, 16, {}, 0.6, 210, 105, 2, U},
      {"s2u1", {1, 2, 3}, 16, {}, 0.6, 210, 52.5, 1, U},   {"s3v3", {1, 2}, 2, all, 0.8, 160, 240, 3, O},
      {"s3v4", {1, 2}, 2, from3, 0.8, 160, 360, 4, O},     {"s3u", {1, 2}, 2, {}, 0.8, 160, 80, 1, U},
      {"s4v4", {3, 5, 6}, 2, from2, 1.0, 210, 315, 4, O},  {"s4v5", {3, 5, 6}, 2, from3, 1.0, 210, 472.5, 5, O},
      {"s4u2", {3, 5, 6}, 2, {}, 1.0, 210, 105, 2, U},     {"s4u1", {3, 5, 6}, 2, {}, 1.0, 210, 52.5, 1, U},
  };
}

Solved solve_row(const Row& r) {
  return solve_case(fat4_problem(r.hosts, 1, r.egress, r.candidates, r.gamma, r.traffic, r.v_star, r.mode), r.pre);
}

}  // namespace

TEST(ForwardingCost, SimpleFlows) {
  const Topology t = build_fat_tree(4);
  EXPECT_DOUBLE_EQ(forwarding_cost_of({}, t), 0.0);
  EXPECT_DOUBLE_EQ(forwarding_cost_of({{0, {0, t.tor_of(0)}, 1.0, 0.0}}, t), 10.0);
  // P1 -> its ToR -> an aggregation switch of the pod -> the other ToR -> P3.
  const int tor1 = t.tor_of(0), tor2 = t.tor_of(2);
  int agg = -1;
  for (int a : t.adjacent(tor1)) {
    if (t.node(a).kind == NodeKind::Aggregation) agg = a;
  }
  ASSERT_GE(agg, 0);
  ASSERT_TRUE(t.linked(agg, tor2));
  const std::vector<ArcFlow> path = {
      {0, {0, tor1}, 1.0, 0.0}, {0, {tor1, agg}, 1.0, 0.0}, {0, {agg, tor2}, 1.0, 0.0}, {0, {tor2, 2}, 1.0, 0.0}};
  EXPECT_DOUBLE_EQ(forwarding_cost_of(path, t), 60.0);
  // Internal hand-off is free and both flow kinds count.
  EXPECT_DOUBLE_EQ(forwarding_cost_of({{0, {3, 3}, 5.0, 5.0}, {1, {0, tor1}, 1.0, 2.0}}, t), 30.0);
}

TEST(ForwardingCost, ReversedArcsCostTheSame) {
  const Topology t = build_fat_tree(4);
  std::vector<ArcFlow> fwd, back;
  for (const auto& l : t.links()) {
    fwd.push_back({0, {l.a, l.b}, 1.5, 0.5});
    back.push_back({0, {l.b, l.a}, 1.5, 0.5});
  }
  EXPECT_DOUBLE_EQ(forwarding_cost_of(fwd, t), forwarding_cost_of(back, t));
}

TEST(AutoPhi, KeepsLoadBelowCapacity) {
  auto p = fat4_problem({2, 5}, 1, 4, {}, 1.0, 360, 4, ScalingMode::Overload);
  EXPECT_NEAR(auto_phi(p.group, 360), 0.99 / 3.6, 1e-15);
  EXPECT_DOUBLE_EQ(auto_phi(p.group, 50), 1.0);
  EXPECT_DOUBLE_EQ(auto_phi(p.group, 0), 1.0);
  p.group.phi = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Validate, RejectsInconsistentProblems) {
  auto p = fat4_problem({2, 5}, 1, 4, pm_range(1, 16), 1.0, 240, 3, ScalingMode::Overload);
  EXPECT_NO_THROW(p.validate());
  auto q = p;
  q.v_star = 1;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.group.egress_pms = {40};
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.group.gamma = 0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.mode = ScalingMode::Underload;
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(FlowNetwork, UnitGammaConservesTotals) {
  const auto s = solve_case(fat4_problem({2, 5}, 1, 4, pm_range(1, 16), 1.0, 240, 3, ScalingMode::Overload), 160);
  double in = 0.0, out = 0.0;
  for (const auto& f : s.d.flows) {
    if (f.arc.from == 0 && f.arc.to != 0) in += f.n;
    if (f.arc.to == 3 && f.arc.from != 3) out += f.m;
    if (f.arc.from == 0 && f.arc.to == 0) in += f.n;
    if (f.arc.from == 3 && f.arc.to == 3) out += f.m;
  }
  EXPECT_NEAR(in, 240.0, 1e-6);
  EXPECT_NEAR(out, 240.0, 1e-6);
}

TEST(OverloadLp, Scenario1LaunchSets) {
  const auto v3 = solve_case(fat4_problem({2, 5}, 1, 4, pm_range(1, 16), 1.2, 240, 3, ScalingMode::Overload), 160);
  EXPECT_EQ(one_based(v3.d.launched_hosts()), (std::vector<int>{4}));
  EXPECT_GT(v3.d.cost_delta, 0.0);
  const auto v4 = solve_case(fat4_problem({2, 5}, 1, 4, pm_range(1, 16), 1.2, 360, 4, ScalingMode::Overload), 160);
  EXPECT_EQ(one_based(v4.d.launched_hosts()), (std::vector<int>{1, 4}));
  EXPECT_EQ(one_based(v4.d.kept_hosts()), (std::vector<int>{2, 5}));
  EXPECT_GT(v4.d.cost_delta, 0.0);
}

TEST(OverloadLp, Scenario3RestrictedCandidatesGoCrossRack) {
  const auto s = solve_case(fat4_problem({1, 2}, 1, 2, pm_range(3, 16), 0.8, 360, 4, ScalingMode::Overload), 160);
  EXPECT_EQ(one_based(s.d.launched_hosts()), (std::vector<int>{3, 4}));
  EXPECT_GT(s.d.cost_delta, 0.0);
  // Neither new host shares a rack with the ingress, so their traffic climbs to the aggregation layer.
  const Topology& t = *s.p.topology;
  for (int h : s.d.launched_hosts()) EXPECT_NE(t.tor_of(h), t.tor_of(0));
}

TEST(OverloadLp, NoNewInstanceOnlyReroutes) {
  const auto p = fat4_problem({2, 5}, 1, 4, pm_range(1, 16), 1.0, 150, 2, ScalingMode::Overload);
  const auto s = solve_case(p, 150);
  EXPECT_TRUE(s.d.launched_hosts().empty());
  EXPECT_EQ(s.rm.instances.size(), 2u);
  EXPECT_NEAR(s.d.cost_delta, 0.0, 1e-9);
}

TEST(OverloadLp, TooFewSlotsIsInfeasible) {
  const auto p = fat4_problem({2, 5}, 1, 4, {7}, 1.0, 360, 4, ScalingMode::Overload);
  EXPECT_THROW(build_overload_lp(p), InfeasibleModel);
  auto q = p;
  q.group.candidate_slots[6] = 2;
  EXPECT_NO_THROW(build_overload_lp(q));
  EXPECT_THROW(build_overload_lp(fat4_problem({2, 5}, 1, 4, {}, 1.0, 360, 4, ScalingMode::Overload)),
               InfeasibleModel);
}

TEST(UnderloadLp, Scenario1DropsTheFarVm) {
  const auto s = solve_case(fat4_problem({2, 5}, 1, 4, {}, 1.2, 80, 1, ScalingMode::Underload), 160);
  EXPECT_EQ(one_based(s.d.terminated_hosts()), (std::vector<int>{5}));
  EXPECT_EQ(one_based(s.d.kept_hosts()), (std::vector<int>{2}));
  EXPECT_LT(s.d.cost_delta, 0.0);
}

TEST(UnderloadLp, Scenario3KeepsIngressHost) {
  const auto s = solve_case(fat4_problem({1, 2}, 1, 2, {}, 0.8, 80, 1, ScalingMode::Underload), 160);
  EXPECT_EQ(one_based(s.d.kept_hosts()), (std::vector<int>{1}));
  EXPECT_LT(s.d.cost_delta, 0.0);
}

TEST(UnderloadLp, CoLocatedTieKeepsLowestId) {
  const auto s = solve_case(fat4_problem({3, 3}, 1, 4, {}, 1.0, 40, 1, ScalingMode::Underload), 80);
  ASSERT_EQ(s.d.assignments.size(), 1u);
  EXPECT_EQ(s.d.assignments[0].vm_id, 1);
  ASSERT_EQ(s.d.terminated.size(), 1u);
  EXPECT_EQ(s.d.terminated[0].vm_id, 2);
}

namespace {

// Overload model with one online VM on P1 and a single new instance over P2..P4.
struct DecodeFixture {
  ScalingProblem p = fat4_problem({1}, 1, 4, {2, 3, 4}, 1.0, 150, 2, ScalingMode::Overload);
  RelaxedModel rm = build_overload_lp(p);

  LpSolution with_interest(const std::vector<double>& e) const {
    LpSolution s;
    s.status = LpStatus::Optimal;
    s.point = Eigen::VectorXd::Zero(rm.lp.num_vars());
    const auto& inst = rm.instances[1];
    for (std::size_t i = 0; i < e.size(); ++i) {
      s.point[inst.interest_var[i]] = e[i];
      s.point[inst.alpha_var[i]] = 0.5;
    }
    s.point[rm.instances[0].alpha_var[0]] = 0.5;
    return s;
  }
};

}  // namespace

TEST(Decode, ArgmaxInterest) {
  DecodeFixture f;
  ASSERT_EQ(f.rm.instances.size(), 2u);
  ASSERT_EQ(one_based(f.rm.instances[1].domain), (std::vector<int>{2, 3, 4}));
  const auto d = decode(f.with_interest({0.2, 0.7, 0.1}), f.rm, f.p);
  EXPECT_EQ(one_based(d.launched_hosts()), (std::vector<int>{3}));
  EXPECT_EQ(d.assignments[1].vm_id, 2);  // first VM of the offline pool
}

TEST(Decode, TieGoesToLowerPm) {
  DecodeFixture f;
  EXPECT_EQ(one_based(decode(f.with_interest({0.0, 0.5, 0.5}), f.rm, f.p).launched_hosts()), (std::vector<int>{3}));
  EXPECT_EQ(one_based(decode(f.with_interest({0.5, 0.5, 0.0}), f.rm, f.p).launched_hosts()), (std::vector<int>{2}));
}

TEST(Decode, NoInterestAnywhereFails) {
  DecodeFixture f;
  EXPECT_THROW(decode(f.with_interest({0.0, 0.0, 0.0}), f.rm, f.p), DecodeError);
  LpSolution bad;
  bad.status = LpStatus::Infeasible;
  EXPECT_THROW(decode(bad, f.rm, f.p), DecodeError);
}

TEST(Decode, SmallShareWarns) {
  DecodeFixture f;
  auto s = f.with_interest({0.0, 0.005, 0.0});
  s.point[f.rm.instances[1].alpha_var[0]] = 0.005;
  EXPECT_FALSE(decode(s, f.rm, f.p).warnings.empty());
}

TEST(Corpus, ConservationSharesAndRoundTrip) {
  for (const auto& r : corpus()) {
    SCOPED_TRACE(r.name);
    const Solved s = solve_row(r);
    EXPECT_LE(conservation_residual(s), 1e-6);
    double shares = 0.0;
    for (const auto& a : s.d.assignments) shares += a.share;
    EXPECT_NEAR(shares, 1.0, 1e-8);
    EXPECT_EQ(static_cast<int>(s.d.assignments.size()), r.v_star);
    // Recomputing the cost from the reported hops reproduces cost and delta exactly.
    const double cost = forwarding_cost_of(s.d.flows, *s.p.topology);
    EXPECT_EQ(cost, s.d.forwarding_cost);
    EXPECT_EQ((cost - *s.d.baseline_cost) / *s.d.baseline_cost, s.d.cost_delta);
    if (r.mode == ScalingMode::Overload) {
      EXPECT_GT(s.d.cost_delta, 0.0);
    } else {
      EXPECT_LT(s.d.cost_delta, 0.0);
    }
  }
}

TEST(Corpus, ReferenceHostSets) {
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> want = {
      // name -> (launched, terminated)
      {"s2v4", {{16}, {}}}, {"s2v5", {{3, 16}, {}}}, {"s2u2", {{}, {3}}}, {"s2u1", {{}, {2, 3}}},
      {"s3v3", {{1}, {}}},  {"s4v4", {{2}, {}}},     {"s4v5", {{3, 4}, {}}}, {"s4u1", {{}, {5, 6}}},
  };
  for (const auto& r : corpus()) {
    const auto it = want.find(r.name);
    if (it == want.end()) continue;
    SCOPED_TRACE(r.name);
    const Solved s = solve_row(r);
    EXPECT_EQ(one_based(s.d.launched_hosts()), it->second.first);
    EXPECT_EQ(one_based(s.d.terminated_hosts()), it->second.second);
  }
}

TEST(Corpus, Scenario4Optimum) {
  const auto s = solve_case(oracle::case4_overload(), 210);
  EXPECT_NEAR(s.sol.objective_value, 46620.0, 1e-6);
}

TEST(Csv, Headers) {
  const auto s = solve_case(fat4_problem({2, 5}, 1, 4, {}, 1.2, 80, 1, ScalingMode::Underload), 160);
  const auto csv = decision_csv(s.d, *s.p.topology);
  EXPECT_EQ(csv.rfind("instance,vm_id,host,action,share,interest\n", 0), 0u);
  EXPECT_NE(csv.find("terminated"), std::string::npos);
  EXPECT_EQ(flows_csv(s.d, *s.p.topology).rfind("from,to,instance,kind,value\n", 0), 0u);
}
