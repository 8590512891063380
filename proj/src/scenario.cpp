#include "chainscale/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace chainscale {

double EventSpec::apply(double pre_event) const {
  switch (kind) {
    case Kind::None: return pre_event;
    case Kind::Overload: return pre_event * std::pow(1.5, steps);
    case Kind::Underload: return pre_event * std::pow(0.5, steps);
    case Kind::Explicit: return traffic;
  }
  return pre_event;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

struct LineCtx {
  const std::string& source;
  int line;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, what); }

  double number(const std::string& s) const {
    if (lower(s) == "inf") return kInf;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail("not a number: " + s);
      return v;
    } catch (const std::logic_error&) {
      fail("not a number: " + s);
    }
  }

  int integer(const std::string& s) const {
    const double v = number(s);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail("not an integer: " + s);
    return static_cast<int>(v);
  }

  Eigen::VectorXd vector(const std::string& s) const {
    const auto parts = split(s, ',');
    if (parts.empty()) fail("empty list");
    Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(parts[i]);
    return v;
  }

  std::map<std::string, std::string> options(const std::vector<std::string>& toks, std::size_t from) const {
    std::map<std::string, std::string> out;
    for (std::size_t i = from; i < toks.size(); ++i) {
      const auto eq = toks[i].find('=');
      if (eq == std::string::npos || eq == 0) fail("expected key=value, got " + toks[i]);
      out[lower(toks[i].substr(0, eq))] = toks[i].substr(eq + 1);
    }
    return out;
  }

  void need(const std::vector<std::string>& toks, std::size_t n) const {
    if (toks.size() < n) fail("'" + toks[0] + "' needs " + std::to_string(n - 1) + " argument(s)");
  }
};

int pm_index(const std::string& tok, int num_pms) {
  if (tok.size() < 2 || (tok[0] != 'P' && tok[0] != 'p')) throw std::invalid_argument("bad PM name: " + tok);
  std::size_t used = 0;
  const int v = std::stoi(tok.substr(1), &used);
  if (used != tok.size() - 1 || v < 1 || v > num_pms) throw std::invalid_argument("unknown PM: " + tok);
  return v - 1;
}

}  // namespace

std::vector<int> parse_pm_list(const std::string& text, int num_pms) {
  std::vector<int> out;
  const std::string t = lower(text);
  if (t == "all") {
    for (int p = 0; p < num_pms; ++p) out.push_back(p);
    return out;
  }
  if (t == "none" || t == "-") return out;
  for (const auto& part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash != std::string::npos) {
      const int a = pm_index(part.substr(0, dash), num_pms);
      const int b = pm_index(part.substr(dash + 1), num_pms);
      if (b < a) throw std::invalid_argument("empty PM range: " + part);
      for (int p = a; p <= b; ++p) out.push_back(p);
    } else {
      out.push_back(pm_index(part, num_pms));
    }
  }
  return out;
}

std::string pm_list(const std::vector<int>& pms) {
  if (pms.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < pms.size(); ++i) out += (i ? "," : "") + std::string("P") + std::to_string(pms[i] + 1);
  return out;
}

unsigned parse_solver_mask(const std::string& text) {
  unsigned mask = 0;
  for (const auto& part : split(lower(text), ',')) {
    if (part == "lp") {
      mask |= kSolverLp;
    } else if (part == "milp") {
      mask |= kSolverMilp;
    } else if (part == "rpadmm" || part == "admm") {
      mask |= kSolverAdmm;
    } else if (part == "all") {
      mask |= kSolverLp | kSolverMilp | kSolverAdmm;
    } else {
      throw std::invalid_argument("unknown solver: " + part);
    }
  }
  if (!mask) throw std::invalid_argument("no solver selected");
  return mask;
}

Scenario parse_scenario(std::istream& in, const std::string& source) {
  Scenario s;
  s.source = source;
  bool saw_group = false;
  std::string raw;
  int lineno = 0;
  auto num_pms = [&] { return s.topology.k * (s.topology.k / 2) * s.topology.pms_per_rack; };

  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const auto toks = tokenize(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (toks.empty()) continue;
    const LineCtx ctx{source, lineno};
    const std::string key = lower(toks[0]);
    auto group = [&]() -> GroupSpec& {
      if (s.groups.empty()) ctx.fail("'" + key + "' must follow a group line");
      return s.groups.back();
    };
    auto pms = [&](const std::string& text) {
      try {
        return parse_pm_list(text, num_pms());
      } catch (const std::exception& e) {
        ctx.fail(e.what());
      }
    };

    try {
      if (key == "name") {
        ctx.need(toks, 2);
        s.name = toks[1];
      } else if (key == "tau") {
        ctx.need(toks, 2);
        s.tau = ctx.number(toks[1]);
        if (!(s.tau > 0)) ctx.fail("tau must be positive");
      } else if (key == "topology") {
        if (saw_group) ctx.fail("topology must come before the groups");
        for (const auto& [k, v] : ctx.options(toks, 1)) {
          if (k == "k") {
            s.topology.k = ctx.integer(v);
          } else if (k == "pms_per_rack") {
            s.topology.pms_per_rack = ctx.integer(v);
          } else if (k == "costs") {
            const Eigen::VectorXd c = ctx.vector(v);
            if (c.size() != 3) ctx.fail("costs needs three values");
            s.topology.costs = {c[0], c[1], c[2]};
          } else if (k == "bandwidth") {
            s.topology.bandwidth = ctx.number(v);
          } else {
            ctx.fail("unknown topology option " + k);
          }
        }
        if (s.topology.k <= 0 || s.topology.k % 2 || s.topology.pms_per_rack < 1) ctx.fail("invalid topology");
      } else if (key == "traffic") {
        ctx.need(toks, 2);
        s.traffic = ctx.number(toks[1]);
      } else if (key == "event") {
        ctx.need(toks, 2);
        const std::string kind = lower(toks[1]);
        if (kind == "none") {
          s.event.kind = EventSpec::Kind::None;
        } else if (kind == "overload" || kind == "underload") {
          ctx.need(toks, 3);
          s.event.kind = kind == "overload" ? EventSpec::Kind::Overload : EventSpec::Kind::Underload;
          s.event.steps = ctx.integer(toks[2]);
          if (s.event.steps < 0) ctx.fail("event steps must be nonnegative");
        } else if (kind == "traffic") {
          ctx.need(toks, 3);
          s.event.kind = EventSpec::Kind::Explicit;
          s.event.traffic = ctx.number(toks[2]);
        } else {
          ctx.fail("unknown event " + toks[1]);
        }
      } else if (key == "solver") {
        ctx.need(toks, 2);
        s.solver.mask = parse_solver_mask(toks[1]);
      } else if (key == "admm") {
        for (const auto& [k, v] : ctx.options(toks, 1)) {
          if (k == "beta") {
            s.solver.admm.beta = ctx.number(v);
          } else if (k == "seed") {
            s.solver.admm.seed = static_cast<std::uint64_t>(ctx.integer(v));
          } else if (k == "iters") {
            s.solver.admm.max_iters = ctx.integer(v);
          } else if (k == "tol") {
            s.solver.admm.primal_tol = ctx.number(v);
          } else {
            ctx.fail("unknown admm option " + k);
          }
        }
      } else if (key == "milp") {
        for (const auto& [k, v] : ctx.options(toks, 1)) {
          if (k != "budget") ctx.fail("unknown milp option " + k);
          s.solver.node_budget = ctx.integer(v);
        }
      } else if (key == "epsilon") {
        ctx.need(toks, 2);
        s.epsilon = ctx.number(toks[1]);
      } else if (key == "weights") {
        for (const auto& [k, v] : ctx.options(toks, 1)) {
          if (k == "deployment") {
            s.weights.deployment = ctx.number(v);
          } else if (k == "forwarding") {
            s.weights.forwarding = ctx.number(v);
          } else {
            ctx.fail("unknown weight " + k);
          }
        }
      } else if (key == "penalties") {
        ctx.need(toks, 2);
        const std::string mode = lower(toks[1]);
        if (mode != "overload" && mode != "underload") ctx.fail("penalties mode must be overload or underload");
        Penalties pen = mode == "overload" ? Penalties::overload() : Penalties::underload();
        for (const auto& [k, v] : ctx.options(toks, 2)) {
          if (k == "activation") {
            pen.activation = ctx.number(v);
          } else if (k == "retention") {
            pen.retention = ctx.number(v);
          } else {
            ctx.fail("unknown penalty " + k);
          }
        }
        (mode == "overload" ? s.overload_penalties : s.underload_penalties) = pen;
      } else if (key == "pm_capacity") {
        ctx.need(toks, 3);
        s.pm_capacity.emplace_back(pms(toks[1]), ctx.vector(toks[2]));
      } else if (key == "expect" || key == "expect:") {
        ctx.need(toks, 3);
        std::string value = toks[2];
        for (std::size_t i = 3; i < toks.size(); ++i) value += " " + toks[i];
        s.expectations.push_back({lower(toks[1]), value, lineno});
      } else if (key == "group") {
        ctx.need(toks, 2);
        saw_group = true;
        GroupSpec g;
        g.name = toks[1];
        g.group.chain = 0;
        g.group.vnf_type = static_cast<int>(s.groups.size()) + 1;
        g.group.omega = Eigen::VectorXd::Constant(1, 0.01);
        g.group.thresholds = Thresholds::uniform(1);
        s.groups.push_back(std::move(g));
      } else if (key == "ingress") {
        ctx.need(toks, 2);
        group().group.ingress_pms = pms(toks[1]);
      } else if (key == "egress") {
        ctx.need(toks, 2);
        group().group.egress_pms = pms(toks[1]);
      } else if (key == "gamma") {
        ctx.need(toks, 2);
        group().group.gamma = ctx.number(toks[1]);
      } else if (key == "phi") {
        ctx.need(toks, 2);
        if (lower(toks[1]) == "auto") {
          group().phi.reset();
        } else {
          group().phi = ctx.number(toks[1]);
        }
      } else if (key == "omega") {
        ctx.need(toks, 2);
        group().group.omega = ctx.vector(toks[1]);
      } else if (key == "thresholds") {
        ctx.need(toks, 4);
        const Eigen::VectorXd hot = ctx.vector(toks[1]), warm = ctx.vector(toks[2]), cold = ctx.vector(toks[3]);
        Thresholds th;
        const auto n = std::max({hot.size(), warm.size(), cold.size()});
        auto widen = [&](const Eigen::VectorXd& v) {
          return v.size() == n ? v : Eigen::VectorXd(Eigen::VectorXd::Constant(n, v[0]));
        };
        th.hot = widen(hot);
        th.warm = widen(warm);
        th.cold = widen(cold);
        th.validate();
        group().group.thresholds = th;
      } else if (key == "candidates") {
        ctx.need(toks, 2);
        group().group.candidate_pms = pms(toks[1]);
      } else if (key == "slots") {
        for (const auto& [k, v] : ctx.options(toks, 1)) {
          for (int p : pms(k)) group().group.candidate_slots[p] = ctx.integer(v);
        }
      } else if (key == "target") {
        group().target = true;
      } else if (key == "vm") {
        ctx.need(toks, 3);
        VmInstance vm;
        vm.id = ctx.integer(toks[1]);
        vm.chain = group().group.chain;
        vm.vnf_type = group().group.vnf_type;
        if (lower(toks[2]) != "off") {
          const auto where = pms(toks[2]);
          if (where.size() != 1) ctx.fail("a VM has exactly one host");
          vm.host = where[0];
        }
        vm.capacity = Eigen::VectorXd::Constant(1, 1.0);
        for (const auto& [k, v] : ctx.options(toks, 3)) {
          if (k == "cap") {
            vm.capacity = ctx.vector(v);
          } else if (k == "util") {
            vm.utilization = ctx.vector(v);
          } else {
            ctx.fail("unknown vm option " + k);
          }
        }
        if (vm.utilization) {
          if (!vm.host) ctx.fail("offline VM cannot report utilization");
          if ((vm.utilization->array() < 0).any() || (vm.utilization->array() > 1).any()) {
            ctx.fail("utilization must lie in [0, 1]");
          }
        }
        (vm.host ? group().group.online : group().group.offline_pool).push_back(vm);
      } else {
        ctx.fail("unknown key '" + toks[0] + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      ctx.fail(e.what());
    }
  }

  if (s.groups.empty()) throw ParseError(source, lineno, "scenario has no group");
  int targets = 0;
  for (const auto& g : s.groups) {
    targets += g.target;
    if (g.group.online.empty()) throw ParseError(source, lineno, "group " + g.name + " has no online VM");
    if (g.group.ingress_pms.empty() || g.group.egress_pms.empty()) {
      throw ParseError(source, lineno, "group " + g.name + " needs ingress and egress");
    }
  }
  if (targets > 1) throw ParseError(source, lineno, "more than one target group");
  if (s.name.empty()) s.name = std::filesystem::path(source).stem().string();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return parse_scenario(in, path.string());
}

bool RunReport::expectations_passed() const {
  return std::all_of(expectations.begin(), expectations.end(), [](const auto& e) { return e.passed; });
}

ScalingProblem make_problem(const Scenario& s, std::shared_ptr<const Topology> topology, std::size_t group,
                            ScalingMode mode) {
  const GroupSpec& spec = s.groups.at(group);
  ScalingProblem p;
  p.topology = std::move(topology);
  p.group = spec.group;
  p.mode = mode;
  p.traffic = s.event.apply(s.traffic);
  p.weights = s.weights;
  p.penalties = mode == ScalingMode::Overload ? s.overload_penalties.value_or(Penalties::overload())
                                              : s.underload_penalties.value_or(Penalties::underload());
  p.group.phi = spec.phi.value_or(auto_phi(p.group, p.traffic));
  p.epsilon = std::min(s.epsilon, p.group.phi);
  const int nv = static_cast<int>(p.group.online.size());
  const int need = p.traffic > 0 ? required_instances(p.group, p.traffic) : 1;
  p.v_star = mode == ScalingMode::Overload ? std::max(need, nv) : std::min(need, nv);
  if (!s.pm_capacity.empty()) {
    const int nr = p.group.num_resources();
    p.pm_capacity = Eigen::MatrixXd::Constant(p.topology->num_pms(), nr, kInf);
    for (const auto& [pms, cap] : s.pm_capacity) {
      if (cap.size() != nr) throw std::invalid_argument("PM capacity needs one value per resource");
      for (int q : pms) p.pm_capacity.row(q) = cap.transpose();
    }
  }
  return p;
}

namespace {

std::string config_string(const VnfGroup& g, const std::vector<std::pair<int, bool>>& hosts) {
  std::vector<std::pair<int, bool>> h = hosts;
  std::sort(h.begin(), h.end());
  std::string mid;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mid += (i ? ", " : "") + std::string(h[i].second ? "*" : "") + "P" + std::to_string(h[i].first + 1);
  }
  return pm_list(g.ingress_pms) + " -> (" + mid + ") -> " + pm_list(g.egress_pms);
}

std::vector<int> multiset(const std::string& value, int num_pms) {
  std::vector<int> v = parse_pm_list(value, num_pms);
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<int> milp_launched(const RunReport& r) {
  std::vector<int> out;
  if (!r.milp) return out;
  for (const auto& e : r.milp->placement) {
    if (!e.online && e.host >= 0) out.push_back(e.host);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExpectationResult evaluate(const Expectation& e, const RunReport& r) {
  ExpectationResult out{e, false, ""};
  const int np = r.topology->num_pms();
  const ScalingDecision* d = r.decision ? &*r.decision : nullptr;
  auto needs_decision = [&] {
    if (!d) out.actual = "no decision";
    return d != nullptr;
  };
  try {
    if (e.key == "state") {
      out.actual = to_string(r.state);
      out.passed = lower(out.actual) == lower(e.value);
    } else if (e.key == "v_star") {
      out.actual = std::to_string(r.v_star);
      out.passed = r.v_star == std::stoi(e.value);
    } else if (e.key == "launched" || e.key == "kept" || e.key == "terminated") {
      if (!needs_decision()) return out;
      const auto got = e.key == "launched" ? d->launched_hosts() : e.key == "kept" ? d->kept_hosts() : d->terminated_hosts();
      out.actual = pm_list(got);
      out.passed = got == multiset(e.value, np);
    } else if (e.key == "kept_includes" || e.key == "launched_includes") {
      if (!needs_decision()) return out;
      const auto got = e.key == "kept_includes" ? d->kept_hosts() : d->launched_hosts();
      out.actual = pm_list(got);
      const auto want = multiset(e.value, np);
      out.passed = std::includes(got.begin(), got.end(), want.begin(), want.end());
    } else if (e.key == "launched_count" || e.key == "terminated_count") {
      if (!needs_decision()) return out;
      const auto n = e.key == "launched_count" ? d->launched_hosts().size() : d->terminated_hosts().size();
      out.actual = std::to_string(n);
      out.passed = static_cast<int>(n) == std::stoi(e.value);
    } else if (e.key == "delta_sign") {
      if (!needs_decision()) return out;
      out.actual = d->cost_delta > 0 ? "+" : d->cost_delta < 0 ? "-" : "0";
      out.passed = out.actual == e.value;
    } else if (e.key == "milp_launched") {
      if (!r.milp) {
        out.actual = "no MILP solution";
        return out;
      }
      const auto got = milp_launched(r);
      out.actual = pm_list(got);
      out.passed = got == multiset(e.value, np);
    } else if (e.key == "admm_gap_max") {
      if (!r.admm) {
        out.actual = "no ADMM run";
        return out;
      }
      std::ostringstream os;
      os << r.admm->final_gap;
      out.actual = os.str();
      out.passed = r.admm->final_gap <= std::stod(e.value);
    } else {
      out.actual = "unknown expectation";
    }
  } catch (const std::exception& ex) {
    out.actual = std::string("error: ") + ex.what();
    out.passed = false;
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AdmmConfig admm_config(const Scenario& s, const RunOverrides& o) {
  AdmmConfig cfg = s.solver.admm;
  if (o.beta) cfg.beta = *o.beta;
  if (o.seed) cfg.seed = *o.seed;
  if (o.iters) cfg.max_iters = *o.iters;
  return cfg;
}

std::size_t target_group(const Scenario& s, const ChainClassification& c) {
  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    if (s.groups[i].target) return i;
  }
  return c.trigger.value_or(0);
}

}  // namespace

RunReport run_scenario(const Scenario& s, const RunOverrides& overrides) {
  RunReport r;
  r.scenario = s.name;
  r.topology = std::make_shared<const Topology>(
      build_fat_tree(s.topology.k, s.topology.pms_per_rack, s.topology.costs, s.topology.bandwidth));
  std::vector<VnfGroup> groups;
  for (const auto& g : s.groups) groups.push_back(g.group);
  const ChainClassification cls = classify_chain(groups);
  r.state = cls.state;
  r.trigger = cls.trigger;
  const std::size_t gi = target_group(s, cls);
  const VnfGroup& g = s.groups[gi].group;
  r.group = s.groups[gi].name;
  r.pre_traffic = s.traffic;
  {
    std::vector<std::pair<int, bool>> hosts;
    for (const auto& vm : g.online) hosts.emplace_back(*vm.host, false);
    r.old_config = config_string(g, hosts);
  }

  if (r.state != ChainState::Normal) {
    const ScalingMode mode = r.state == ChainState::Overload ? ScalingMode::Overload : ScalingMode::Underload;
    r.mode = mode;
    const ScalingProblem p = make_problem(s, r.topology, gi, mode);
    r.traffic = p.traffic;
    r.v_star = p.v_star;
    r.model = mode == ScalingMode::Overload ? "overload LP" : "underload LP";
    const unsigned mask = overrides.solvers.value_or(s.solver.mask);
    const double baseline = baseline_forwarding_cost(p, s.traffic);

    if (mask & kSolverLp) {
      RelaxedModel rm;
      try {
        rm = mode == ScalingMode::Overload ? build_overload_lp(p) : build_underload_lp(p);
      } catch (const InfeasibleModel& e) {
        throw ScenarioInfeasible(e.what());
      }
      const auto t0 = std::chrono::steady_clock::now();
      const LpSolution sol = solve(rm.lp);
      r.stats.push_back({r.model, rm.lp.num_vars(), rm.lp.num_rows(), seconds_since(t0), to_string(sol.status)});
      if (!sol.optimal()) throw ScenarioInfeasible(r.model + " is " + to_string(sol.status));
      r.decision = decode(sol, rm, p, baseline);
      std::vector<std::pair<int, bool>> hosts;
      for (const auto& a : r.decision->assignments) hosts.emplace_back(a.host, a.action == VmAction::Launched);
      r.new_config = config_string(g, hosts);
      for (const auto& w : r.decision->warnings) r.notes.push_back("warning: " + w);
    }
    if (mask & kSolverMilp) {
      MilpProblem mp = build_milp(p);
      const auto t0 = std::chrono::steady_clock::now();
      MilpSolution ms = solve_milp(mp, s.solver.node_budget);
      r.stats.push_back({"MILP", mp.lp.num_vars(), mp.lp.num_rows(), seconds_since(t0), to_string(ms.status)});
      if (ms.status == MilpStatus::Infeasible) throw ScenarioInfeasible("MILP is infeasible");
      if (!ms.proven) r.notes.push_back("MILP node budget exhausted; incumbent not proven optimal");
      if (!(mask & kSolverLp) && ms.has_incumbent) {
        std::vector<std::pair<int, bool>> hosts;
        for (const auto& e : ms.placement) {
          if (e.host >= 0) hosts.emplace_back(e.host, !e.online);
        }
        r.new_config = config_string(g, hosts);
      }
      r.milp = std::move(ms);
      r.milp_problem = std::move(mp);
    }
    if (mask & kSolverAdmm) {
      if (mode == ScalingMode::Overload) {
        const auto t0 = std::chrono::steady_clock::now();
        const ReformulatedSystem rs = reformulate(p);
        r.admm = compare_solvers(p, admm_config(s, overrides));
        r.stats.push_back({"RP-ADMM", rs.sys.num_vars(), rs.sys.num_rows(), seconds_since(t0),
                           std::to_string(r.admm->trace.iterations.size()) + " iterations"});
      } else {
        r.notes.push_back("RP-ADMM applies to overload only; skipped");
      }
    }
  }

  for (const auto& e : s.expectations) r.expectations.push_back(evaluate(e, r));
  return r;
}

void normalize_costs(std::vector<RunReport>& reports) {
  double top = 0.0;
  for (const auto& r : reports) {
    if (r.decision && r.decision->baseline_cost) top = std::max(top, *r.decision->baseline_cost);
  }
  for (auto& r : reports) {
    if (top > 0 && r.decision && r.decision->baseline_cost) r.normalized_cost = *r.decision->baseline_cost / top;
  }
}

std::string format_report(const RunReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "scenario: " << r.scenario << "\n";
  os << "state: " << to_string(r.state);
  if (r.state != ChainState::Normal) os << " (group " << r.group << ")";
  os << "\n";
  if (r.state == ChainState::Normal) {
    os << "no scaling needed; no model solved\n";
  } else {
    os << "traffic: " << r.pre_traffic << " -> " << r.traffic << "\n";
    os << "v*: " << r.v_star << "\n";
    os << "model: " << r.model << "\n";
    os << "old configuration: " << r.old_config << "\n";
    if (!r.new_config.empty()) {
      os << "new configuration: " << r.new_config;
      if (r.new_config.find('*') != std::string::npos) os << "   (* = launched)";
      os << "\n";
    }
    if (r.decision) {
      const auto& d = *r.decision;
      os << "forwarding cost: " << d.forwarding_cost;
      if (d.baseline_cost) {
        os << " (baseline " << *d.baseline_cost << ", " << std::showpos << std::fixed << std::setprecision(1)
           << 100.0 * d.cost_delta << std::noshowpos << "%)";
        os.unsetf(std::ios::fixed);
        os << std::setprecision(6);
      }
      os << "\n";
      if (!d.terminated.empty()) os << "terminated: " << pm_list(d.terminated_hosts()) << "\n";
    }
    if (r.normalized_cost) os << "normalized baseline cost: " << *r.normalized_cost << "\n";
    if (r.milp) {
      os << "MILP: " << to_string(r.milp->status) << ", total " << r.milp->total << " (deployment "
         << r.milp->deployment_cost << ", forwarding " << r.milp->forwarding_cost << "), " << r.milp->nodes
         << " nodes\n";
    }
    if (r.admm) {
      os << "RP-ADMM: LP optimum " << r.admm->lp_optimum << ", final objective "
         << (r.admm->objective.empty() ? 0.0 : r.admm->objective.back()) << ", final gap " << r.admm->final_gap
         << ", max normalized violation "
         << (r.admm->trace.iterations.empty() ? 0.0 : r.admm->trace.iterations.back().max_violation) << "\n";
    }
    for (const auto& st : r.stats) {
      os << "solver " << st.model << ": " << st.variables << " variables, " << st.constraints << " constraints, "
         << st.seconds << " s, " << st.status << "\n";
    }
  }
  for (const auto& n : r.notes) os << n << "\n";
  for (const auto& e : r.expectations) {
    os << "expect " << e.expectation.key << " " << e.expectation.value << ": " << (e.passed ? "PASS" : "FAIL")
       << " (got " << e.actual << ")\n";
  }
  return os.str();
}

std::vector<std::filesystem::path> write_outputs(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& body) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    written.push_back(path);
  };
  put("report.txt", format_report(r));
  if (r.decision) {
    put("decisions.csv", decision_csv(*r.decision, *r.topology));
    put("flows.csv", flows_csv(*r.decision, *r.topology));
  }
  if (r.milp && r.milp->has_incumbent && r.milp_problem) {
    put("placement.csv", placement_csv(*r.milp_problem, *r.milp));
    put("milp_flows.csv", milp_flows_csv(*r.milp_problem, *r.milp));
  }
  if (r.admm) {
    std::ostringstream gap;
    gap.precision(12);
    gap << "iteration,objective,gap\n";
    for (std::size_t i = 0; i < r.admm->gap.size(); ++i) {
      gap << i + 1 << ',' << r.admm->objective[i] << ',' << r.admm->gap[i] << '\n';
    }
    put("trace.csv", trace_csv(r.admm->trace));
    put("gap.csv", gap.str());
    put("permutations.txt", permutation_log(r.admm->trace));
  }
  return written;
}

const std::vector<SweepReference>& sweep_reference() {
  static const std::vector<SweepReference> ref = {
      {2, 5, 4, 120, 25, 68, 62, 0.555, 0.075, 0.055},
      {4, 20, 16, 672, 315, 254, 188, 5.064, 0.614, 0.318},
      {8, 80, 64, 4224, 1251, 998, 692, 323.523, 14.977, 6.635},
      {16, 320, 256, 29184, 4995, 3974, 2708, std::nullopt, 974.235, 456.674},
      {32, 1280, 1024, 129024, 19971, 15878, 10772, std::nullopt, std::nullopt, std::nullopt},
      {64, 5120, 4096, 466944, 79875, 63494, 43028, std::nullopt, std::nullopt, std::nullopt},
  };
  return ref;
}

double time_budget_from_env(double fallback) {
  const char* v = std::getenv(kTimeBudgetEnv);
  if (!v || !*v) return fallback;
  try {
    const double b = std::stod(v);
    return b > 0 ? b : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

namespace {

// Two online VMs next to the ingress and one offline VM, the same shape at
// every size.
ScalingProblem sweep_problem(std::shared_ptr<const Topology> t, ScalingMode mode) {
  ScalingProblem p;
  const int np = t->num_pms();
  p.topology = std::move(t);
  p.mode = mode;
  p.penalties = Penalties::for_mode(mode);
  VnfGroup& g = p.group;
  g.omega = Eigen::VectorXd::Constant(1, 0.01);
  g.thresholds = Thresholds::uniform(1);
  for (int i = 0; i < 3; ++i) {
    VmInstance vm;
    vm.id = i + 1;
    vm.capacity = Eigen::VectorXd::Constant(1, 1.0);
    if (i < 2) {
      vm.host = (i + 1) % np;
      g.online.push_back(vm);
    } else {
      g.offline_pool.push_back(vm);
    }
  }
  g.ingress_pms = {0};
  g.egress_pms = {np - 1};
  for (int q = 0; q < np; ++q) g.candidate_pms.push_back(q);
  p.traffic = mode == ScalingMode::Overload ? 250.0 : 50.0;
  p.v_star = mode == ScalingMode::Overload ? 3 : 1;
  g.phi = auto_phi(g, p.traffic);
  p.epsilon = std::min(p.epsilon, g.phi);
  return p;
}

}  // namespace

std::vector<SweepRow> sweep_topologies(const std::vector<int>& ks, double budget_seconds, bool solve_models) {
  std::vector<SweepRow> rows;
  for (int k : ks) {
    auto t = std::make_shared<const Topology>(build_fat_tree(k));
    SweepRow row;
    row.k = k;
    row.switches = t->num_switches();
    row.pms = t->num_pms();
    const auto budget = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(budget_seconds));

    const ScalingProblem over = sweep_problem(t, ScalingMode::Overload);
    const ScalingProblem under = sweep_problem(t, ScalingMode::Underload);

    const MilpProblem mp = build_milp(over);
    row.milp = {"MILP", mp.lp.num_vars(), mp.lp.num_rows(), 0.0, "not solved"};
    const RelaxedModel ro = build_overload_lp(over);
    row.overload = {"overload LP", ro.lp.num_vars(), ro.lp.num_rows(), 0.0, "not solved"};
    const RelaxedModel ru = build_underload_lp(under);
    row.underload = {"underload LP", ru.lp.num_vars(), ru.lp.num_rows(), 0.0, "not solved"};

    if (solve_models) {
      auto time_lp = [&](const LpModel& lp, ModelStats& st, bool& timed_out) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          st.status = to_string(solve(lp, kDefaultLpTolerance, t0 + budget).status);
        } catch (const TimeLimitExceeded&) {
          timed_out = true;
          st.status = "N/A";
        }
        st.seconds = seconds_since(t0);
      };
      {
        const auto t0 = std::chrono::steady_clock::now();
        const MilpSolution ms = solve_milp(mp, kDefaultNodeBudget, t0 + budget);
        row.milp.seconds = seconds_since(t0);
        row.milp_timed_out = !ms.proven;
        row.milp.status = row.milp_timed_out ? "N/A" : to_string(ms.status);
      }
      time_lp(ro.lp, row.overload, row.overload_timed_out);
      time_lp(ru.lp, row.underload, row.underload_timed_out);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  auto ref_for = [](int k) -> const SweepReference* {
    for (const auto& r : sweep_reference()) {
      if (r.k == k) return &r;
    }
    return nullptr;
  };
  auto secs = [](const ModelStats& st, bool timed_out) {
    if (st.status == "not solved") return std::string("-");
    if (timed_out) return std::string("N/A");
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << st.seconds;
    return s.str();
  };
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string("N/A");
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << *v;
    return s.str();
  };
  os << "k,switches,pms,milp_vars,milp_rows,milp_s,overload_vars,overload_rows,overload_s,underload_vars,"
        "underload_rows,underload_s,ref_milp_vars,ref_milp_rows,ref_milp_s,ref_overload_rows,ref_overload_s,"
        "ref_underload_rows,ref_underload_s\n";
  for (const auto& r : rows) {
    os << r.k << ',' << r.switches << ',' << r.pms << ',' << r.milp.variables << ',' << r.milp.constraints << ','
       << secs(r.milp, r.milp_timed_out) << ',' << r.overload.variables << ',' << r.overload.constraints << ','
       << secs(r.overload, r.overload_timed_out) << ',' << r.underload.variables << ',' << r.underload.constraints
       << ',' << secs(r.underload, r.underload_timed_out);
    if (const auto* ref = ref_for(r.k)) {
      os << ',' << ref->milp_variables << ',' << ref->milp_constraints << ',' << opt(ref->milp_seconds) << ','
         << ref->overload_constraints << ',' << opt(ref->overload_seconds) << ',' << ref->underload_constraints << ','
         << opt(ref->underload_seconds);
    } else {
      os << ",,,,,,,";
    }
    os << '\n';
  }
  return os.str();
}

GapReport compare_scenario(const Scenario& s, const RunOverrides& overrides) {
  auto topo = std::make_shared<const Topology>(
      build_fat_tree(s.topology.k, s.topology.pms_per_rack, s.topology.costs, s.topology.bandwidth));
  std::vector<VnfGroup> groups;
  for (const auto& g : s.groups) groups.push_back(g.group);
  const ChainClassification cls = classify_chain(groups);
  if (cls.state != ChainState::Overload) throw std::invalid_argument("solver comparison needs an overload scenario");
  const ScalingProblem p = make_problem(s, topo, target_group(s, cls), ScalingMode::Overload);
  return compare_solvers(p, admm_config(s, overrides));
}

}  // namespace chainscale
