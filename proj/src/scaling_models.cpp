#include "chainscale/scaling_models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chainscale {

const char* to_string(ScalingMode m) { return m == ScalingMode::Overload ? "Overload" : "Underload"; }

const char* to_string(VmAction a) {
  switch (a) {
    case VmAction::Kept: return "kept";
    case VmAction::Launched: return "launched";
    case VmAction::Terminated: return "terminated";
  }
  return "?";
}

const char* family_name(int family) {
  switch (family) {
    case kSwitchUnprocessed: return "switch_n";
    case kSwitchProcessed: return "switch_m";
    case kPmProcessing: return "pm_processing";
    case kIngressTotal: return "ingress_total";
    case kEgressTotal: return "egress_total";
    case kShareEqual: return "share_equal";
    case kInterestSum: return "interest_sum";
    case kNewArrival: return "new_arrival";
    case kOnlineArrival: return "online_arrival";
    case kSlotCapacity: return "slot_capacity";
    case kShareCoupling: return "share_coupling";
    case kShareCoverage: return "share_coverage";
    case kArrival: return "arrival";
    case kResourceCapacity: return "resource_capacity";
    case kBandwidth: return "bandwidth";
    case kPlacement: return "placement";
    default: return "other";
  }
}

namespace {

bool in(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void check_pms(const Topology& t, const std::vector<int>& pms, const char* what) {
  for (int p : pms) {
    if (p < 0 || p >= t.num_pms()) throw std::invalid_argument(std::string(what) + " references unknown PM");
  }
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void ScalingProblem::validate() const {
  if (!topology) throw std::invalid_argument("problem has no topology");
  const Topology& t = *topology;
  const VnfGroup& g = group;
  if (g.online.empty()) throw std::invalid_argument("group has no online VM");
  if (g.ingress_pms.empty() || g.egress_pms.empty()) throw std::invalid_argument("ingress and egress sets must be nonempty");
  check_pms(t, g.ingress_pms, "ingress");
  check_pms(t, g.egress_pms, "egress");
  check_pms(t, g.candidate_pms, "candidate set");
  for (const auto& vm : g.online) {
    if (!vm.host) throw std::invalid_argument("online VM without host");
    check_pms(t, {*vm.host}, "VM host");
  }
  for (const auto& vm : g.offline_pool) {
    if (vm.host) throw std::invalid_argument("offline VM " + std::to_string(vm.id) + " has a host");
  }
  if (!(traffic >= 0)) throw std::invalid_argument("traffic must be nonnegative");
  if (!(g.gamma > 0)) throw std::invalid_argument("gamma must be positive");
  if (!(g.phi > 0 && g.phi <= 1)) throw std::invalid_argument("phi must lie in (0, 1]");
  if (!(epsilon >= 0 && epsilon <= g.phi)) throw std::invalid_argument("epsilon must lie in [0, phi]");
  if (v_star < 1) throw std::invalid_argument("v* must be at least 1");
  const int nv = static_cast<int>(g.online.size());
  if (mode == ScalingMode::Overload && v_star < nv) throw std::invalid_argument("overload needs v* >= |V|");
  if (mode == ScalingMode::Underload && v_star > nv) throw std::invalid_argument("underload needs v* <= |V|");
  auto check_vm = [&](const VmInstance& vm) {
    if (vm.capacity.size() != g.omega.size()) throw std::invalid_argument("omega and capacity differ in length");
    for (Eigen::Index r = 0; r < vm.capacity.size(); ++r) {
      if (!(g.phi * g.omega[r] * traffic < vm.capacity[r])) {
        throw std::invalid_argument("phi * omega * T must stay below the capacity of VM " + std::to_string(vm.id));
      }
    }
  };
  for (const auto& vm : g.online) check_vm(vm);
  for (const auto& vm : g.offline_pool) check_vm(vm);
  if (pm_capacity.size() > 0 && (pm_capacity.rows() != t.num_pms() || pm_capacity.cols() != g.omega.size())) {
    throw std::invalid_argument("PM capacity matrix has the wrong shape");
  }
}

double auto_phi(const VnfGroup& g, double traffic) {
  double phi = 1.0;
  if (!(traffic > 0)) return phi;
  auto visit = [&](const VmInstance& vm) {
    for (Eigen::Index r = 0; r < vm.capacity.size() && r < g.omega.size(); ++r) {
      if (g.omega[r] > 0) phi = std::min(phi, 0.99 * vm.capacity[r] / (traffic * g.omega[r]));
    }
  };
  for (const auto& vm : g.online) visit(vm);
  for (const auto& vm : g.offline_pool) visit(vm);
  return phi;
}

namespace {

SparseTerms collect(const std::vector<Arc>& arcs, const std::vector<int>& vars, int node, bool into) {
  SparseTerms out;
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    if ((into ? arcs[a].to : arcs[a].from) == node) out.emplace_back(vars[a], 1.0);
  }
  return out;
}

}  // namespace

SparseTerms FlowVars::n_into(int node) const { return collect(n_arcs, n_var, node, true); }
SparseTerms FlowVars::n_out_of(int node) const { return collect(n_arcs, n_var, node, false); }
SparseTerms FlowVars::m_into(int node) const { return collect(m_arcs, m_var, node, true); }
SparseTerms FlowVars::m_out_of(int node) const { return collect(m_arcs, m_var, node, false); }

FlowVars add_flow_network(LpModel& lp, const Topology& t, const std::vector<int>& ingress,
                          const std::vector<int>& egress, const std::vector<int>& domain, double gamma,
                          double cost_weight, const std::string& tag) {
  FlowVars f;
  auto n_ok = [&](int i, int j) {
    if (i == j) return in(ingress, i) && in(domain, i);
    if (t.is_pm(i)) return in(ingress, i);
    if (t.is_pm(j)) return in(domain, j);
    return true;
  };
  auto m_ok = [&](int i, int j) {
    if (i == j) return in(domain, i) && in(egress, i);
    if (t.is_pm(i)) return in(domain, i);
    if (t.is_pm(j)) return in(egress, j);
    return true;
  };

  std::vector<Arc> arcs;
  for (int p = 0; p < t.num_pms(); ++p) arcs.push_back({p, p});
  for (const Link& l : t.links()) {
    arcs.push_back({l.a, l.b});
    arcs.push_back({l.b, l.a});
  }
  for (const Arc& a : arcs) {
    const double c = cost_weight * forwarding_cost(t, a.from, a.to);
    const std::string suffix = tag + "_" + t.label(a.from) + "_" + t.label(a.to);
    if (n_ok(a.from, a.to)) {
      f.n_arcs.push_back(a);
      f.n_var.push_back(lp.add_var("n" + suffix, 0.0, kInf, c));
    }
    if (m_ok(a.from, a.to)) {
      f.m_arcs.push_back(a);
      f.m_var.push_back(lp.add_var("m" + suffix, 0.0, kInf, c));
    }
  }

  auto balance = [](SparseTerms in_terms, const SparseTerms& out_terms, double out_scale) {
    for (auto [v, c] : out_terms) in_terms.emplace_back(v, -out_scale * c);
    return in_terms;
  };
  for (int s = t.num_pms(); s < t.num_nodes(); ++s) {
    lp.add_row("consn" + tag + "_" + t.label(s), balance(f.n_into(s), f.n_out_of(s), 1.0), Relation::Eq, 0.0,
               kSwitchUnprocessed);
    lp.add_row("consm" + tag + "_" + t.label(s), balance(f.m_into(s), f.m_out_of(s), 1.0), Relation::Eq, 0.0,
               kSwitchProcessed);
  }
  for (int p : domain) {
    // m out - gamma * n in = 0
    SparseTerms terms = f.m_out_of(p);
    for (auto [v, c] : f.n_into(p)) terms.emplace_back(v, -gamma * c);
    lp.add_row("process" + tag + "_" + t.label(p), std::move(terms), Relation::Eq, 0.0, kPmProcessing);
  }
  return f;
}

namespace {

// Rows IV and V over all commodities.
void add_totals(LpModel& lp, const std::vector<FlowVars>& flows, const VnfGroup& g, double traffic) {
  SparseTerms ingress, egress;
  for (const auto& f : flows) {
    for (int p : g.ingress_pms) {
      for (auto t : f.n_out_of(p)) ingress.push_back(t);
    }
    for (int p : g.egress_pms) {
      for (auto t : f.m_into(p)) egress.push_back(t);
    }
  }
  lp.add_row("ingress", std::move(ingress), Relation::Eq, traffic, kIngressTotal);
  lp.add_row("egress", std::move(egress), Relation::Eq, traffic * g.gamma, kEgressTotal);
}

// Interest-relaxed instance over `domain`: equal shares, shares equal the
// interest sum, and arrival at each PM proportional to its interest.
void add_relaxed_rows(LpModel& lp, const Topology& t, RelaxedInstance& inst, const FlowVars& f, double traffic,
                      double phi, const std::string& tag) {
  for (int p : inst.domain) {
    inst.alpha_var.push_back(lp.add_var("alpha" + tag + "_" + t.label(p), 0.0, phi));
    inst.interest_var.push_back(lp.add_var("e" + tag + "_" + t.label(p), 0.0, 1.0));
  }
  for (std::size_t i = 1; i < inst.domain.size(); ++i) {
    lp.add_row("share" + tag + "_" + t.label(inst.domain[i]), {{inst.alpha_var[0], 1.0}, {inst.alpha_var[i], -1.0}},
               Relation::Eq, 0.0, kShareEqual);
  }
  for (std::size_t i = 0; i < inst.domain.size(); ++i) {
    SparseTerms terms;
    for (int e : inst.interest_var) terms.emplace_back(e, 1.0);
    terms.emplace_back(inst.alpha_var[i], -1.0);
    lp.add_row("interest" + tag + "_" + t.label(inst.domain[i]), std::move(terms), Relation::Eq, 0.0, kInterestSum);
  }
  for (std::size_t i = 0; i < inst.domain.size(); ++i) {
    SparseTerms terms = f.n_into(inst.domain[i]);
    terms.emplace_back(inst.interest_var[i], -traffic);
    lp.add_row("arrive" + tag + "_" + t.label(inst.domain[i]), std::move(terms), Relation::Eq, 0.0, kNewArrival);
  }
}

void add_slot_rows(RelaxedModel& rm, const Topology& t, std::size_t first_relaxed) {
  for (std::size_t s = 0; s < rm.slot_pms.size(); ++s) {
    const int p = rm.slot_pms[s];
    SparseTerms terms;
    for (std::size_t d = first_relaxed; d < rm.instances.size(); ++d) {
      const auto& inst = rm.instances[d];
      for (std::size_t i = 0; i < inst.domain.size(); ++i) {
        if (inst.domain[i] == p) terms.emplace_back(inst.interest_var[i], 1.0);
      }
    }
    if (!terms.empty()) {
      rm.lp.add_row("slots_" + t.label(p), std::move(terms), Relation::Le, rm.slot_capacity[s], kSlotCapacity);
    }
  }
}

}  // namespace

RelaxedModel build_overload_lp(const ScalingProblem& p) {
  if (p.mode != ScalingMode::Overload) throw std::invalid_argument("overload model needs an overload problem");
  p.validate();
  const Topology& t = *p.topology;
  const VnfGroup& g = p.group;
  const int nv = static_cast<int>(g.online.size());
  const int extra = p.v_star - nv;
  const std::vector<int> cands = sorted_unique(g.candidate_pms);
  if (extra > 0) {
    if (cands.empty()) throw InfeasibleModel("no candidate PM for a new instance");
    int slots = 0;
    for (int c : cands) slots += g.slots_on(c);
    if (slots < extra) throw InfeasibleModel("v* exceeds the capacity of the candidate set");
  }

  RelaxedModel rm;
  rm.mode = ScalingMode::Overload;
  rm.traffic = p.traffic;
  rm.gamma = g.gamma;
  rm.phi = g.phi;
  for (int d = 0; d < p.v_star; ++d) {
    RelaxedInstance inst;
    const std::string tag = "_" + std::to_string(d + 1);
    if (d < nv) {
      inst.vm_id = g.online[static_cast<std::size_t>(d)].id;
      inst.fixed_host = *g.online[static_cast<std::size_t>(d)].host;
      inst.domain = {inst.fixed_host};
    } else {
      inst.domain = cands;
    }
    FlowVars f = add_flow_network(rm.lp, t, g.ingress_pms, g.egress_pms, inst.domain, g.gamma, p.weights.forwarding, tag);
    if (d < nv) {
      const int h = inst.fixed_host;
      inst.alpha_var.push_back(rm.lp.add_var("alpha" + tag + "_" + t.label(h), 0.0, g.phi));
      inst.interest_var.push_back(rm.lp.add_var("e" + tag + "_" + t.label(h), 0.0, 1.0));
      rm.lp.add_row("interest" + tag + "_" + t.label(h), {{inst.interest_var[0], 1.0}, {inst.alpha_var[0], -1.0}},
                    Relation::Eq, 0.0, kInterestSum);
      SparseTerms arrival = f.n_into(h);
      arrival.emplace_back(inst.alpha_var[0], -p.traffic);
      rm.lp.add_row("online" + tag + "_" + t.label(h), std::move(arrival), Relation::Eq, 0.0, kOnlineArrival);
    } else {
      add_relaxed_rows(rm.lp, t, inst, f, p.traffic, g.phi, tag);
    }
    rm.instances.push_back(std::move(inst));
    rm.flows.push_back(std::move(f));
  }
  add_totals(rm.lp, rm.flows, g, p.traffic);
  if (extra > 0) {
    for (int c : cands) {
      rm.slot_pms.push_back(c);
      rm.slot_capacity.push_back(g.phi * g.slots_on(c));
    }
    add_slot_rows(rm, t, static_cast<std::size_t>(nv));
  }
  return rm;
}

RelaxedModel build_underload_lp(const ScalingProblem& p) {
  if (p.mode != ScalingMode::Underload) throw std::invalid_argument("underload model needs an underload problem");
  p.validate();
  const Topology& t = *p.topology;
  const VnfGroup& g = p.group;
  const std::vector<int> hosts = g.host_set();

  RelaxedModel rm;
  rm.mode = ScalingMode::Underload;
  rm.traffic = p.traffic;
  rm.gamma = g.gamma;
  rm.phi = g.phi;
  for (int d = 0; d < p.v_star; ++d) {
    RelaxedInstance inst;
    const std::string tag = "_" + std::to_string(d + 1);
    inst.domain = hosts;
    FlowVars f = add_flow_network(rm.lp, t, g.ingress_pms, g.egress_pms, inst.domain, g.gamma, p.weights.forwarding, tag);
    add_relaxed_rows(rm.lp, t, inst, f, p.traffic, g.phi, tag);
    rm.instances.push_back(std::move(inst));
    rm.flows.push_back(std::move(f));
  }
  add_totals(rm.lp, rm.flows, g, p.traffic);
  for (int h : hosts) {
    int count = 0;
    for (const auto& vm : g.online) count += (*vm.host == h);
    rm.slot_pms.push_back(h);
    rm.slot_capacity.push_back(g.phi * count);
  }
  add_slot_rows(rm, t, 0);
  return rm;
}

double forwarding_cost_of(const std::vector<ArcFlow>& flows, const Topology& t) {
  double total = 0.0;
  for (const auto& f : flows) {
    if (f.arc.from != f.arc.to && !t.linked(f.arc.from, f.arc.to)) throw std::invalid_argument("flow on a non-link");
    total += forwarding_cost(t, f.arc.from, f.arc.to) * (f.n + f.m);
  }
  return total;
}

namespace {

std::vector<int> hosts_with(const std::vector<InstanceAssignment>& as, VmAction a) {
  std::vector<int> out;
  for (const auto& x : as) {
    if (x.action == a) out.push_back(x.host);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ArcFlow> collect_flows(const Eigen::VectorXd& x, const RelaxedModel& m) {
  std::vector<ArcFlow> out;
  for (std::size_t d = 0; d < m.flows.size(); ++d) {
    std::map<std::pair<int, int>, ArcFlow> arcs;
    const auto& f = m.flows[d];
    for (std::size_t a = 0; a < f.n_arcs.size(); ++a) {
      const double v = x[f.n_var[a]];
      if (std::abs(v) <= 1e-12) continue;
      auto& af = arcs[{f.n_arcs[a].from, f.n_arcs[a].to}];
      af.arc = f.n_arcs[a];
      af.n = v;
    }
    for (std::size_t a = 0; a < f.m_arcs.size(); ++a) {
      const double v = x[f.m_var[a]];
      if (std::abs(v) <= 1e-12) continue;
      auto& af = arcs[{f.m_arcs[a].from, f.m_arcs[a].to}];
      af.arc = f.m_arcs[a];
      af.m = v;
    }
    for (auto& [key, af] : arcs) {
      af.instance = static_cast<int>(d);
      out.push_back(af);
    }
  }
  return out;
}

}  // namespace

std::vector<int> ScalingDecision::launched_hosts() const { return hosts_with(assignments, VmAction::Launched); }
std::vector<int> ScalingDecision::kept_hosts() const { return hosts_with(assignments, VmAction::Kept); }
std::vector<int> ScalingDecision::terminated_hosts() const { return hosts_with(terminated, VmAction::Terminated); }

ScalingDecision decode(const LpSolution& solution, const RelaxedModel& model, const ScalingProblem& p,
                       std::optional<double> baseline_cost) {
  if (!solution.optimal()) throw DecodeError(std::string("cannot decode a ") + to_string(solution.status) + " LP");
  const Eigen::VectorXd& x = solution.point;
  const Topology& t = *p.topology;
  const VnfGroup& g = p.group;
  ScalingDecision out;

  std::map<int, int> free_slots;
  for (std::size_t s = 0; s < model.slot_pms.size(); ++s) {
    free_slots[model.slot_pms[s]] = model.mode == ScalingMode::Overload
                                        ? g.slots_on(model.slot_pms[s])
                                        : static_cast<int>(std::lround(model.slot_capacity[s] / model.phi));
  }

  for (std::size_t d = 0; d < model.instances.size(); ++d) {
    const auto& inst = model.instances[d];
    InstanceAssignment a;
    a.instance = static_cast<int>(d);
    a.share = x[inst.alpha_var[0]];
    if (inst.fixed_host >= 0) {
      a.host = inst.fixed_host;
      a.vm_id = inst.vm_id;
      a.action = VmAction::Kept;
      a.interest = x[inst.interest_var[0]];
    } else {
      int best = -1;
      double best_e = 0.0;
      for (std::size_t i = 0; i < inst.domain.size(); ++i) {
        const int pm_idx = inst.domain[i];
        if (free_slots[pm_idx] <= 0) continue;
        const double e = x[inst.interest_var[i]];
        if (e > best_e + 1e-12) {
          best = pm_idx;
          best_e = e;
        }
      }
      if (best < 0) throw DecodeError("instance " + std::to_string(d + 1) + " has no positive interest on a free PM");
      --free_slots[best];
      a.host = best;
      a.interest = best_e;
      a.action = model.mode == ScalingMode::Overload ? VmAction::Launched : VmAction::Kept;
    }
    if (a.share < p.epsilon) {
      out.warnings.push_back("instance " + std::to_string(d + 1) + " share " + std::to_string(a.share) +
                             " is below epsilon");
    }
    out.assignments.push_back(a);
  }

  if (model.mode == ScalingMode::Overload) {
    // Launched instances take offline VMs in pool order.
    std::size_t next = 0;
    for (auto& a : out.assignments) {
      if (a.action != VmAction::Launched) continue;
      a.vm_id = next < g.offline_pool.size() ? g.offline_pool[next].id : -1;
      ++next;
    }
  } else {
    // Each kept instance claims the lowest-id online VM left on its host.
    std::vector<VmInstance> pool = g.online;
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<bool> used(pool.size(), false);
    for (auto& a : out.assignments) {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!used[i] && *pool[i].host == a.host) {
          used[i] = true;
          a.vm_id = pool[i].id;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      InstanceAssignment a;
      a.vm_id = pool[i].id;
      a.host = *pool[i].host;
      a.action = VmAction::Terminated;
      out.terminated.push_back(a);
    }
  }

  out.flows = collect_flows(x, model);
  out.forwarding_cost = forwarding_cost_of(out.flows, t);
  out.baseline_cost = baseline_cost;
  if (baseline_cost && *baseline_cost > 0) out.cost_delta = (out.forwarding_cost - *baseline_cost) / *baseline_cost;
  return out;
}

double baseline_forwarding_cost(const ScalingProblem& p, double pre_event_traffic) {
  ScalingProblem base = p;
  base.mode = ScalingMode::Overload;
  base.traffic = pre_event_traffic;
  base.v_star = static_cast<int>(p.group.online.size());
  base.group.phi = auto_phi(p.group, pre_event_traffic);
  base.epsilon = std::min(base.epsilon, base.group.phi);
  const RelaxedModel rm = build_overload_lp(base);
  const LpSolution s = solve(rm.lp);
  if (!s.optimal()) throw std::runtime_error("baseline configuration is " + std::string(to_string(s.status)));
  return forwarding_cost_of(collect_flows(s.point, rm), *p.topology);
}

std::string decision_csv(const ScalingDecision& d, const Topology& t) {
  std::ostringstream os;
  os.precision(10);
  os << "instance,vm_id,host,action,share,interest\n";
  auto row = [&](const InstanceAssignment& a) {
    os << (a.instance >= 0 ? std::to_string(a.instance + 1) : std::string()) << ',' << a.vm_id << ','
       << t.label(a.host) << ',' << to_string(a.action) << ',' << a.share << ',' << a.interest << '\n';
  };
  for (const auto& a : d.assignments) row(a);
  for (const auto& a : d.terminated) row(a);
  return os.str();
}

std::string flows_csv(const ScalingDecision& d, const Topology& t) {
  std::ostringstream os;
  os.precision(10);
  os << "from,to,instance,kind,value\n";
  for (const auto& f : d.flows) {
    if (f.n != 0.0) os << t.label(f.arc.from) << ',' << t.label(f.arc.to) << ',' << f.instance + 1 << ",n," << f.n << '\n';
    if (f.m != 0.0) os << t.label(f.arc.from) << ',' << t.label(f.arc.to) << ',' << f.instance + 1 << ",m," << f.m << '\n';
  }
  return os.str();
}

}  // namespace chainscale
