#include "chainscale/milp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chainscale {

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::Infeasible: return "Infeasible";
    case MilpStatus::BudgetExhausted: return "BudgetExhausted";
  }
  return "?";
}

std::vector<int> MilpProblem::free_binaries() const {
  std::vector<int> out;
  for (int b : binaries) {
    if (lp.var(b).upper > lp.var(b).lower) out.push_back(b);
  }
  return out;
}

MilpProblem build_milp(const ScalingProblem& p) {
  p.validate();
  const Topology& t = *p.topology;
  const VnfGroup& g = p.group;
  MilpProblem mp;
  mp.topology = p.topology;
  mp.penalties = p.penalties;
  mp.weights = p.weights;
  mp.vms = g.online;
  mp.vms.insert(mp.vms.end(), g.offline_pool.begin(), g.offline_pool.end());
  mp.num_online = static_cast<int>(g.online.size());
  const int np = t.num_pms();
  const int nvm = static_cast<int>(mp.vms.size());
  LpModel& lp = mp.lp;

  std::vector<int> all_pms(static_cast<std::size_t>(np));
  for (int q = 0; q < np; ++q) all_pms[static_cast<std::size_t>(q)] = q;
  auto allowed = [&](int q, int j) {
    if (mp.is_online(j)) return *mp.vms[static_cast<std::size_t>(j)].host == q;
    return g.candidate_pms.empty() ||
           std::find(g.candidate_pms.begin(), g.candidate_pms.end(), q) != g.candidate_pms.end();
  };

  mp.b_var.assign(static_cast<std::size_t>(np), std::vector<int>(static_cast<std::size_t>(nvm)));
  mp.alpha_var = mp.b_var;
  for (int j = 0; j < nvm; ++j) {
    const std::string vm = "_v" + std::to_string(mp.vms[static_cast<std::size_t>(j)].id);
    const double pen = mp.is_online(j) ? -p.penalties.retention : p.penalties.activation;
    for (int q = 0; q < np; ++q) {
      const int b = lp.add_var("b_" + t.label(q) + vm, 0.0, allowed(q, j) ? 1.0 : 0.0, p.weights.deployment * pen);
      mp.b_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)] = b;
      mp.binaries.push_back(b);
      mp.alpha_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)] =
          lp.add_var("alpha_" + t.label(q) + vm, 0.0, g.phi);
    }
  }

  SparseTerms coverage;
  for (int j = 0; j < nvm; ++j) {
    const std::string vm = "_v" + std::to_string(mp.vms[static_cast<std::size_t>(j)].id);
    FlowVars f = add_flow_network(lp, t, g.ingress_pms, g.egress_pms, all_pms, g.gamma, p.weights.forwarding, vm);
    for (int q = 0; q < np; ++q) {
      const int b = mp.b_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)];
      const int a = mp.alpha_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)];
      const std::string at = "_" + t.label(q) + vm;
      lp.add_row("eps" + at, {{a, 1.0}, {b, -p.epsilon}}, Relation::Ge, 0.0, kShareCoupling);
      lp.add_row("phi" + at, {{a, 1.0}, {b, -g.phi}}, Relation::Le, 0.0, kShareCoupling);
      SparseTerms arrival = f.n_into(q);
      arrival.emplace_back(a, -p.traffic);
      lp.add_row("arrive" + at, std::move(arrival), Relation::Eq, 0.0, kArrival);
      coverage.emplace_back(a, 1.0);
    }
    mp.flows.push_back(std::move(f));
  }
  lp.add_row("coverage", std::move(coverage), Relation::Eq, 1.0, kShareCoverage);

  if (p.pm_capacity.size() > 0) {
    for (int q = 0; q < np; ++q) {
      for (int r = 0; r < g.num_resources(); ++r) {
        if (!std::isfinite(p.pm_capacity(q, r))) continue;
        SparseTerms terms;
        for (int j = 0; j < nvm; ++j) {
          terms.emplace_back(mp.b_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)],
                             mp.vms[static_cast<std::size_t>(j)].capacity[r]);
        }
        lp.add_row("cap_" + t.label(q) + "_r" + std::to_string(r), std::move(terms), Relation::Le,
                   p.pm_capacity(q, r), kResourceCapacity);
      }
    }
  }

  SparseTerms ingress, egress;
  for (const auto& f : mp.flows) {
    for (int q : g.ingress_pms) {
      for (auto term : f.n_out_of(q)) ingress.push_back(term);
    }
    for (int q : g.egress_pms) {
      for (auto term : f.m_into(q)) egress.push_back(term);
    }
  }
  lp.add_row("ingress", std::move(ingress), Relation::Eq, p.traffic, kIngressTotal);
  lp.add_row("egress", std::move(egress), Relation::Eq, p.traffic * g.gamma, kEgressTotal);

  for (const Link& l : t.links()) {
    if (!std::isfinite(l.bandwidth)) continue;
    for (auto [from, to] : {std::pair{l.a, l.b}, std::pair{l.b, l.a}}) {
      SparseTerms terms;
      for (const auto& f : mp.flows) {
        for (std::size_t a = 0; a < f.n_arcs.size(); ++a) {
          if (f.n_arcs[a].from == from && f.n_arcs[a].to == to) terms.emplace_back(f.n_var[a], 1.0);
        }
        for (std::size_t a = 0; a < f.m_arcs.size(); ++a) {
          if (f.m_arcs[a].from == from && f.m_arcs[a].to == to) terms.emplace_back(f.m_var[a], 1.0);
        }
      }
      lp.add_row("bw_" + t.label(from) + "_" + t.label(to), std::move(terms), Relation::Le, l.bandwidth, kBandwidth);
    }
  }

  for (int j = 0; j < nvm; ++j) {
    SparseTerms terms;
    for (int q = 0; q < np; ++q) terms.emplace_back(mp.b_var[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)], 1.0);
    lp.add_row("place_v" + std::to_string(mp.vms[static_cast<std::size_t>(j)].id), std::move(terms), Relation::Le, 1.0,
               kPlacement);
  }
  lp.validate();
  return mp;
}

double deployment_cost(const std::vector<PlacementEntry>& placement, const Penalties& penalties) {
  double c = 0.0;
  for (const auto& e : placement) {
    if (e.host < 0) continue;
    c += e.online ? -penalties.retention : penalties.activation;
  }
  return c;
}

void describe(const MilpProblem& p, const Eigen::VectorXd& x, MilpSolution& out) {
  const int np = static_cast<int>(p.b_var.size());
  out.placement.clear();
  for (std::size_t j = 0; j < p.vms.size(); ++j) {
    PlacementEntry e;
    e.vm_id = p.vms[j].id;
    e.online = p.is_online(static_cast<int>(j));
    for (int q = 0; q < np; ++q) {
      if (x[p.b_var[static_cast<std::size_t>(q)][j]] > 0.5) e.host = q;
    }
    out.placement.push_back(e);
  }
  out.deployment_cost = deployment_cost(out.placement, p.penalties);
  double fwd = 0.0;
  for (const auto& f : p.flows) {
    for (std::size_t a = 0; a < f.n_arcs.size(); ++a) fwd += forwarding_cost(*p.topology, f.n_arcs[a].from, f.n_arcs[a].to) * x[f.n_var[a]];
    for (std::size_t a = 0; a < f.m_arcs.size(); ++a) fwd += forwarding_cost(*p.topology, f.m_arcs[a].from, f.m_arcs[a].to) * x[f.m_var[a]];
  }
  out.forwarding_cost = fwd;
  out.total = p.weights.deployment * out.deployment_cost + p.weights.forwarding * out.forwarding_cost;
}

LpSolution solve_fixed(const MilpProblem& p, const std::vector<int>& values) {
  if (values.size() != p.binaries.size()) throw std::invalid_argument("one value per binary expected");
  LpModel lp = p.lp;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i] ? 1.0 : 0.0;
    const LpVar& var = lp.var(p.binaries[i]);
    if (v < var.lower || v > var.upper) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      return s;
    }
    lp.set_bounds(p.binaries[i], v, v);
  }
  return solve(lp);
}

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  std::vector<std::pair<int, double>> fixes;  // (var, value)
  double bound = -kInf;                       // parent's LP value
};

}  // namespace

MilpSolution solve_milp(const MilpProblem& p, int node_budget, Deadline deadline) {
  MilpSolution best;
  std::vector<Node> open;
  open.push_back({});
  int processed = 0;
  bool exhausted = false;
  auto prune_gap = [&](double bound) {
    return best.has_incumbent && bound >= best.total - 1e-9 * std::max(1.0, std::abs(best.total));
  };

  while (!open.empty()) {
    if (processed >= node_budget) {
      exhausted = true;
      break;
    }
    if (processed > 0 && processed % 16 == 0) {
      // Best bound ends up at the back, where the next pop happens.
      std::stable_sort(open.begin(), open.end(), [](const Node& a, const Node& b) { return a.bound > b.bound; });
    }
    Node node = std::move(open.back());
    open.pop_back();
    if (prune_gap(node.bound)) continue;
    ++processed;

    LpModel lp = p.lp;
    for (auto [v, val] : node.fixes) lp.set_bounds(v, val, val);
    LpSolution s;
    try {
      s = solve(lp, kDefaultLpTolerance, deadline);
    } catch (const TimeLimitExceeded&) {
      exhausted = true;
      break;
    }
    if (processed == 1 && s.optimal()) best.root_bound = s.objective_value;
    if (!s.optimal()) continue;
    if (prune_gap(s.objective_value)) continue;

    int branch = -1;
    double worst = kIntTol;
    for (int b : p.binaries) {
      const double v = s.point[b];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > worst + 1e-12) {
        worst = frac;
        branch = b;
      }
    }
    if (branch < 0) {
      // Integral: re-solve with the binaries pinned so the point is clean.
      std::vector<int> values;
      for (int b : p.binaries) values.push_back(s.point[b] > 0.5 ? 1 : 0);
      const LpSolution fixed = solve_fixed(p, values);
      if (!fixed.optimal()) continue;
      MilpSolution cand;
      cand.point = fixed.point;
      describe(p, fixed.point, cand);
      if (!best.has_incumbent || cand.total < best.total) {
        cand.root_bound = best.root_bound;
        cand.has_incumbent = true;
        best = std::move(cand);
      }
      continue;
    }
    Node down{node.fixes, s.objective_value};
    down.fixes.emplace_back(branch, 0.0);
    Node up{std::move(node.fixes), s.objective_value};
    up.fixes.emplace_back(branch, 1.0);
    open.push_back(std::move(down));
    open.push_back(std::move(up));
  }

  best.nodes = processed;
  best.proven = !exhausted;
  if (best.has_incumbent) {
    best.status = exhausted ? MilpStatus::BudgetExhausted : MilpStatus::Optimal;
  } else {
    best.status = exhausted ? MilpStatus::BudgetExhausted : MilpStatus::Infeasible;
  }
  return best;
}

std::string placement_csv(const MilpProblem& p, const MilpSolution& s) {
  std::ostringstream os;
  os.precision(10);
  os << "vm_id,was_online,host,share\n";
  for (std::size_t j = 0; j < s.placement.size(); ++j) {
    const auto& e = s.placement[j];
    const double share = e.host >= 0 ? s.point[p.alpha_var[static_cast<std::size_t>(e.host)][j]] : 0.0;
    os << e.vm_id << ',' << (e.online ? 1 : 0) << ',' << (e.host >= 0 ? p.topology->label(e.host) : "off") << ','
       << share << '\n';
  }
  return os.str();
}

std::string milp_flows_csv(const MilpProblem& p, const MilpSolution& s) {
  std::ostringstream os;
  os.precision(10);
  os << "from,to,vm_id,kind,value\n";
  const Topology& t = *p.topology;
  for (std::size_t j = 0; j < p.flows.size(); ++j) {
    const auto& f = p.flows[j];
    for (std::size_t a = 0; a < f.n_arcs.size(); ++a) {
      const double v = s.point[f.n_var[a]];
      if (std::abs(v) > 1e-12) os << t.label(f.n_arcs[a].from) << ',' << t.label(f.n_arcs[a].to) << ',' << p.vms[j].id << ",n," << v << '\n';
    }
    for (std::size_t a = 0; a < f.m_arcs.size(); ++a) {
      const double v = s.point[f.m_var[a]];
      if (std::abs(v) > 1e-12) os << t.label(f.m_arcs[a].from) << ',' << t.label(f.m_arcs[a].to) << ',' << p.vms[j].id << ",m," << v << '\n';
    }
  }
  return os.str();
}

}  // namespace chainscale
