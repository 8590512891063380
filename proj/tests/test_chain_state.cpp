#include <gtest/gtest.h>

#include "chainscale/chain_state.hpp"

using namespace chainscale;

namespace {

VnfGroup group_with(std::vector<std::vector<double>> utils, Thresholds th = Thresholds::uniform(1)) {
  VnfGroup g;
  g.thresholds = th;
  g.omega = Eigen::VectorXd::Constant(th.num_resources(), 0.01);
  int id = 1;
  for (const auto& u : utils) {
    VmInstance vm;
    vm.id = id;
    vm.host = id - 1;
    vm.capacity = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(u.size()));
    vm.utilization = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    g.online.push_back(vm);
    ++id;
  }
  return g;
}

}  // namespace

TEST(Classify, HotVmMeansOverload) { EXPECT_EQ(classify_group(group_with({{0.95}, {0.75}})), ChainState::Overload); }

TEST(Classify, ColdAverageMeansUnderload) {
  EXPECT_EQ(classify_group(group_with({{0.40}, {0.15}})), ChainState::Underload);
}

TEST(Classify, SingleVmNeverUnderload) {
  EXPECT_EQ(classify_group(group_with({{0.10}})), ChainState::Normal);
  EXPECT_EQ(classify_group(group_with({{0.0}})), ChainState::Normal);
  EXPECT_EQ(classify_group(group_with({{0.95}})), ChainState::Overload);
}

TEST(Classify, WarmPeakBlocksUnderload) {
  // Average is cold but one VM sits above the warm line.
  EXPECT_EQ(classify_group(group_with({{0.85}, {0.0}, {0.0}})), ChainState::Normal);
}

TEST(Classify, ThresholdBoundaries) {
  EXPECT_EQ(classify_group(group_with({{0.90}, {0.5}})), ChainState::Overload);
  EXPECT_EQ(classify_group(group_with({{0.30}, {0.30}})), ChainState::Underload);
  EXPECT_EQ(classify_group(group_with({{0.31}, {0.30}})), ChainState::Normal);
}

TEST(Classify, AnyResourceCanTrigger) {
  const Thresholds th = Thresholds::uniform(2);
  EXPECT_EQ(classify_group(group_with({{0.2, 0.92}, {0.2, 0.5}}, th)), ChainState::Overload);
  EXPECT_EQ(classify_group(group_with({{0.2, 0.5}, {0.1, 0.5}}, th)), ChainState::Underload);
}

TEST(Classify, MissingUtilizationThrows) {
  VnfGroup g = group_with({{0.5}, {0.5}});
  g.online[1].utilization.reset();
  EXPECT_THROW(classify_group(g), ClassificationError);
  EXPECT_THROW(classify_group(VnfGroup{}), ClassificationError);
}

TEST(Thresholds, ValidateOrdering) {
  EXPECT_THROW(Thresholds::uniform(1, 0.5, 0.6, 0.3), std::invalid_argument);
  Thresholds th = Thresholds::uniform(1);
  th.cold[0] = 0.85;
  EXPECT_THROW(th.validate(), std::invalid_argument);
  EXPECT_NO_THROW(Thresholds::uniform(2).validate());
}

TEST(ClassifyChain, FirstOverloadWins) {
  const auto normal = group_with({{0.5}, {0.5}});
  const auto hot = group_with({{0.95}, {0.5}});
  const auto cold = group_with({{0.1}, {0.1}});
  auto c = classify_chain({normal, hot, normal});
  EXPECT_EQ(c.state, ChainState::Overload);
  EXPECT_EQ(c.trigger, 1u);
  c = classify_chain({normal, normal});
  EXPECT_EQ(c.state, ChainState::Normal);
  EXPECT_FALSE(c.trigger.has_value());
  c = classify_chain({cold, hot});
  EXPECT_EQ(c.state, ChainState::Overload);
  EXPECT_EQ(c.trigger, 1u);
  c = classify_chain({normal, cold, cold});
  EXPECT_EQ(c.state, ChainState::Underload);
  EXPECT_EQ(c.trigger, 1u);
  EXPECT_THROW(classify_chain({}), std::invalid_argument);
}

TEST(RequiredInstances, Formula) {
  VnfGroup g;
  VmInstance vm;
  vm.capacity = Eigen::VectorXd::Constant(1, 1.0);
  g.online.push_back(vm);
  g.omega = Eigen::VectorXd::Constant(1, 0.02);
  EXPECT_EQ(required_instances(g, 100.0), 2);
  g.omega = Eigen::VectorXd::Constant(1, 0.001);
  EXPECT_EQ(required_instances(g, 1.0), 1);

  g.online[0].capacity = Eigen::Vector2d(1.0, 0.5);
  g.omega = Eigen::Vector2d(0.025, 0.01);
  EXPECT_EQ(required_instances(g, 120.0), 3);
  EXPECT_THROW(required_instances(g, 0.0), std::invalid_argument);
}
