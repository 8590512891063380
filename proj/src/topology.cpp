#include "chainscale/topology.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace chainscale {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::PM: return "PM";
    case NodeKind::ToR: return "ToR";
    case NodeKind::Aggregation: return "Aggregation";
    case NodeKind::Core: return "Core";
  }
  return "?";
}

int Topology::flat(NodeId id) const {
  if (!contains(id)) {
    throw std::out_of_range("unknown node " + std::string(to_string(id.kind)) + " " +
                            std::to_string(id.index));
  }
  return offset_[static_cast<int>(id.kind)] + id.index;
}

NodeId Topology::node(int flat) const {
  if (flat < 0 || flat >= num_nodes()) throw std::out_of_range("flat node index out of range");
  NodeKind kind = kinds_[static_cast<std::size_t>(flat)];
  return {kind, flat - offset_[static_cast<int>(kind)]};
}

bool Topology::contains(NodeId id) const {
  int kind = static_cast<int>(id.kind);
  return kind >= 0 && kind < 4 && id.index >= 0 && id.index < count_[kind];
}

int Topology::tor_of(int pm_flat) const {
  if (!is_pm(pm_flat)) throw std::invalid_argument("tor_of expects a PM");
  return adjacent(pm_flat).front();
}

bool Topology::linked(int a, int b) const {
  if (a < 0 || b < 0 || a >= num_nodes() || b >= num_nodes()) return false;
  const auto& nb = adjacent(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

double Topology::link_cost(int a, int b) const {
  if (!linked(a, b)) {
    throw std::invalid_argument("no link between " + label(a) + " and " + label(b));
  }
  int lo = std::min(static_cast<int>(kinds_[static_cast<std::size_t>(a)]),
                    static_cast<int>(kinds_[static_cast<std::size_t>(b)]));
  switch (lo) {
    case 0: return costs_.pm_tor;
    case 1: return costs_.tor_agg;
    default: return costs_.agg_core;
  }
}

double Topology::bandwidth(int a, int b) const {
  if (!linked(a, b)) throw std::invalid_argument("no link between " + label(a) + " and " + label(b));
  for (const Link& l : links_) {
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l.bandwidth;
  }
  return 0.0;
}

std::string Topology::label(int flat) const {
  NodeId id = node(flat);
  switch (id.kind) {
    case NodeKind::PM: return "P" + std::to_string(id.index + 1);
    case NodeKind::ToR: return "T" + std::to_string(id.index);
    case NodeKind::Aggregation: return "A" + std::to_string(id.index);
    case NodeKind::Core: return "C" + std::to_string(id.index);
  }
  return "?";
}

Topology build_fat_tree(int k, int pms_per_rack, LayerCosts costs, double uniform_bandwidth) {
  if (k <= 0 || k % 2 != 0) throw std::invalid_argument("fat-tree arity k must be even and positive");
  if (pms_per_rack < 1) throw std::invalid_argument("pms_per_rack must be at least 1");
  if (costs.pm_tor < 0 || costs.tor_agg < 0 || costs.agg_core < 0) {
    throw std::invalid_argument("layer costs must be nonnegative");
  }
  if (!(uniform_bandwidth >= 0)) throw std::invalid_argument("bandwidth must be nonnegative");

  Topology t;
  t.k_ = k;
  t.pms_per_rack_ = pms_per_rack;
  t.costs_ = costs;
  const int half = k / 2;
  const int tors = k * half;
  t.count_[0] = tors * pms_per_rack;
  t.count_[1] = tors;
  t.count_[2] = k * half;
  t.count_[3] = half * half;
  for (int i = 1; i < 4; ++i) t.offset_[i] = t.offset_[i - 1] + t.count_[i - 1];

  const int n = t.offset_[3] + t.count_[3];
  t.kinds_.resize(static_cast<std::size_t>(n));
  t.pod_.assign(static_cast<std::size_t>(n), -1);
  t.adj_.assign(static_cast<std::size_t>(n), {});
  for (int kind = 0; kind < 4; ++kind) {
    for (int i = 0; i < t.count_[kind]; ++i) {
      t.kinds_[static_cast<std::size_t>(t.offset_[kind] + i)] = static_cast<NodeKind>(kind);
    }
  }

  auto connect = [&](int a, int b) {
    t.adj_[static_cast<std::size_t>(a)].push_back(b);
    t.adj_[static_cast<std::size_t>(b)].push_back(a);
    t.links_.push_back({std::min(a, b), std::max(a, b), uniform_bandwidth});
  };

  for (int pod = 0; pod < k; ++pod) {
    for (int r = 0; r < half; ++r) {
      const int tor = t.offset_[1] + pod * half + r;
      const int agg = t.offset_[2] + pod * half + r;
      t.pod_[static_cast<std::size_t>(tor)] = pod;
      t.pod_[static_cast<std::size_t>(agg)] = pod;
      for (int h = 0; h < pms_per_rack; ++h) {
        const int p = (pod * half + r) * pms_per_rack + h;
        t.pod_[static_cast<std::size_t>(p)] = pod;
        connect(p, tor);
      }
    }
    for (int r = 0; r < half; ++r) {
      for (int a = 0; a < half; ++a) connect(t.offset_[1] + pod * half + r, t.offset_[2] + pod * half + a);
    }
    // Aggregation switch a of every pod uplinks to core group a.
    for (int a = 0; a < half; ++a) {
      for (int c = 0; c < half; ++c) connect(t.offset_[2] + pod * half + a, t.offset_[3] + a * half + c);
    }
  }
  for (auto& nb : t.adj_) std::sort(nb.begin(), nb.end());
  std::sort(t.links_.begin(), t.links_.end(),
            [](const Link& x, const Link& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  return t;
}

double forwarding_cost(const Topology& t, int i, int j) {
  if (i == j) {
    if (t.is_pm(i)) return 0.0;
    throw std::invalid_argument("intra-node transfer is only defined on PMs");
  }
  return t.link_cost(i, j);
}

double forwarding_cost(const Topology& t, NodeId i, NodeId j) {
  return forwarding_cost(t, t.flat(i), t.flat(j));
}

std::vector<NodeId> neighbors(const Topology& t, NodeId i) {
  std::vector<NodeId> out;
  for (int j : t.adjacent(t.flat(i))) out.push_back(t.node(j));
  return out;
}

std::string to_text(const Topology& t) {
  std::ostringstream os;
  os << "# fat-tree k=" << t.k() << " pms_per_rack=" << t.pms_per_rack() << " nodes=" << t.num_nodes()
     << " links=" << t.num_links() << "\n";
  for (int v = 0; v < t.num_nodes(); ++v) {
    NodeId id = t.node(v);
    os << to_string(id.kind) << ' ' << id.index << ' ' << t.pod(v);
    for (int w : t.adjacent(v)) os << ' ' << t.label(w);
    os << '\n';
  }
  return os.str();
}

}  // namespace chainscale
