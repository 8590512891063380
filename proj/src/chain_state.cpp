#include "chainscale/chain_state.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace chainscale {

Thresholds Thresholds::uniform(int num_resources, double hot, double warm, double cold) {
  Thresholds t;
  t.hot = Eigen::VectorXd::Constant(num_resources, hot);
  t.warm = Eigen::VectorXd::Constant(num_resources, warm);
  t.cold = Eigen::VectorXd::Constant(num_resources, cold);
  t.validate();
  return t;
}

void Thresholds::validate() const {
  if (warm.size() != hot.size() || cold.size() != hot.size()) {
    throw std::invalid_argument("threshold vectors differ in length");
  }
  for (Eigen::Index r = 0; r < hot.size(); ++r) {
    if (!(cold[r] > 0 && cold[r] < warm[r] && warm[r] < hot[r] && hot[r] <= 1.0)) {
      throw std::invalid_argument("thresholds must satisfy 0 < cold < warm < hot <= 1");
    }
  }
}

std::vector<int> VnfGroup::host_set() const {
  std::set<int> hosts;
  for (const auto& vm : online) {
    if (vm.host) hosts.insert(*vm.host);
  }
  return {hosts.begin(), hosts.end()};
}

int VnfGroup::slots_on(int pm) const {
  auto it = candidate_slots.find(pm);
  return it == candidate_slots.end() ? 1 : it->second;
}

const char* to_string(ChainState s) {
  switch (s) {
    case ChainState::Normal: return "Normal";
    case ChainState::Underload: return "Underload";
    case ChainState::Overload: return "Overload";
  }
  return "?";
}

ChainState classify_group(const VnfGroup& g) {
  const Thresholds& th = g.thresholds;
  const int nr = th.num_resources();
  if (g.online.empty()) throw ClassificationError("group has no online VM");

  Eigen::MatrixXd util(static_cast<Eigen::Index>(g.online.size()), nr);
  for (std::size_t i = 0; i < g.online.size(); ++i) {
    const auto& vm = g.online[i];
    if (!vm.utilization || vm.utilization->size() != nr) {
      throw ClassificationError("VM " + std::to_string(vm.id) + " is missing a utilization sample");
    }
    util.row(static_cast<Eigen::Index>(i)) = vm.utilization->transpose();
  }

  const Eigen::RowVectorXd peak = util.colwise().maxCoeff();
  for (int r = 0; r < nr; ++r) {
    if (peak[r] >= th.hot[r]) return ChainState::Overload;
  }
  if (g.online.size() < 2) return ChainState::Normal;
  const Eigen::RowVectorXd mean = util.colwise().mean();
  for (int r = 0; r < nr; ++r) {
    if (mean[r] <= th.cold[r] && peak[r] <= th.warm[r]) return ChainState::Underload;
  }
  return ChainState::Normal;
}

ChainClassification classify_chain(const std::vector<VnfGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("chain has no VNF groups");
  ChainClassification out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ChainState s = classify_group(groups[i]);
    if (s == ChainState::Overload) return {ChainState::Overload, i};
    if (s == ChainState::Underload && out.state == ChainState::Normal) out = {ChainState::Underload, i};
  }
  return out;
}

namespace {

const Eigen::VectorXd& reference_capacity(const VnfGroup& g) {
  if (!g.online.empty()) return g.online.front().capacity;
  if (!g.offline_pool.empty()) return g.offline_pool.front().capacity;
  throw std::invalid_argument("group has no VM to take a capacity from");
}

}  // namespace

int required_instances(const VnfGroup& g, double traffic) {
  if (!(traffic > 0)) throw std::invalid_argument("traffic must be positive");
  const Eigen::VectorXd& cap = reference_capacity(g);
  if (cap.size() != g.omega.size()) throw std::invalid_argument("omega and capacity differ in length");
  int v = 1;
  for (Eigen::Index r = 0; r < cap.size(); ++r) {
    if (!(cap[r] > 0)) throw std::invalid_argument("VM capacity must be positive");
    // Guard the ceiling against representation noise such as 100 * 0.02 / 1.0.
    const double ratio = traffic * g.omega[r] / cap[r];
    v = std::max(v, static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio))));
  }
  return v;
}

}  // namespace chainscale
