#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace chainscale {

enum class NodeKind { PM = 0, ToR = 1, Aggregation = 2, Core = 3 };

const char* to_string(NodeKind kind);

// Identifies a node by kind and its index within that kind.
struct NodeId {
  NodeKind kind = NodeKind::PM;
  int index = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline NodeId pm(int index) { return {NodeKind::PM, index}; }

// Per-bit-per-unit-time forwarding cost of each layer of the fat-tree.
struct LayerCosts {
  double pm_tor = 10.0;
  double tor_agg = 20.0;
  double agg_core = 40.0;
};

inline constexpr double kUnlimitedBandwidth = std::numeric_limits<double>::infinity();

struct Link {
  int a = 0;  // flat index, a < b
  int b = 0;
  double bandwidth = kUnlimitedBandwidth;
};

// A k-ary fat-tree with a fixed node order: PMs first, then ToR, aggregation
// and core switches, each grouped by pod. Every node also has a flat index in
// that order, which is what the model builders use for variable indexing.
class Topology {
 public:
  int k() const { return k_; }
  int pms_per_rack() const { return pms_per_rack_; }
  const LayerCosts& layer_costs() const { return costs_; }

  int num_nodes() const { return static_cast<int>(kinds_.size()); }
  int num_pms() const { return count_[0]; }
  int num_tors() const { return count_[1]; }
  int num_aggregations() const { return count_[2]; }
  int num_cores() const { return count_[3]; }
  int num_switches() const { return num_tors() + num_aggregations() + num_cores(); }
  int num_links() const { return static_cast<int>(links_.size()); }

  int flat(NodeId id) const;
  NodeId node(int flat) const;
  bool contains(NodeId id) const;
  bool is_pm(int flat) const { return flat < count_[0]; }
  bool is_switch(int flat) const { return !is_pm(flat); }

  // Pod of a PM, ToR or aggregation switch; -1 for core switches.
  int pod(int flat) const { return pod_[static_cast<std::size_t>(flat)]; }
  // Flat index of the ToR a PM is attached to.
  int tor_of(int pm_flat) const;

  // Neighbours in ascending flat order.
  const std::vector<int>& adjacent(int flat) const { return adj_[static_cast<std::size_t>(flat)]; }
  bool linked(int a, int b) const;
  double link_cost(int a, int b) const;
  double bandwidth(int a, int b) const;

  const std::vector<Link>& links() const { return links_; }

  // Human-readable label such as "P3", "T0", "A5" or "C2" (1-based for PMs).
  std::string label(int flat) const;

 private:
  friend Topology build_fat_tree(int, int, LayerCosts, double);

  int k_ = 0;
  int pms_per_rack_ = 0;
  LayerCosts costs_;
  int count_[4] = {0, 0, 0, 0};
  int offset_[4] = {0, 0, 0, 0};
  std::vector<NodeKind> kinds_;
  std::vector<int> pod_;
  std::vector<std::vector<int>> adj_;
  std::vector<Link> links_;
};

Topology build_fat_tree(int k, int pms_per_rack = 2, LayerCosts costs = {},
                        double uniform_bandwidth = kUnlimitedBandwidth);

// Cost of moving one unit of traffic from i to j. Zero for i == j on a PM
// (the two VNFs exchange traffic internally). Throws for non-adjacent pairs.
double forwarding_cost(const Topology& t, NodeId i, NodeId j);
double forwarding_cost(const Topology& t, int i, int j);

std::vector<NodeId> neighbors(const Topology& t, NodeId i);

// One line per node: kind, index, pod, neighbour labels.
std::string to_text(const Topology& t);

}  // namespace chainscale
