#include "chainscale/rpadmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace chainscale {

void LinearSystem::use_scalar_blocks() {
  blocks.assign(static_cast<std::size_t>(num_vars()), {});
  for (int j = 0; j < num_vars(); ++j) blocks[static_cast<std::size_t>(j)] = {j};
}

void LinearSystem::validate() const {
  const int n = num_vars();
  if (A.rows() != num_rows() || A.cols() != n || lo.size() != n || hi.size() != n) {
    throw std::invalid_argument("linear system dimensions disagree");
  }
  if (static_cast<int>(row_family.size()) != num_rows()) throw std::invalid_argument("one family per row expected");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& blk : blocks) {
    for (int j : blk) {
      if (j < 0 || j >= n) throw std::invalid_argument("block references a missing variable");
      ++seen[static_cast<std::size_t>(j)];
    }
    for (std::size_t a = 0; a < blk.size(); ++a) {
      for (std::size_t b = a + 1; b < blk.size(); ++b) {
        const double dot = A.col(blk[a]).dot(A.col(blk[b]));
        if (std::abs(dot) > 1e-12) throw std::invalid_argument("block columns must be orthogonal");
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    if (seen[static_cast<std::size_t>(j)] != 1) throw std::invalid_argument("blocks must partition the variables");
    if (lo[j] > hi[j]) throw std::invalid_argument("empty variable box");
  }
}

double scalar_block_update(double c, const std::vector<QuadTerm>& terms, double lo, double hi, double beta) {
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  double aa = 0.0, ar = 0.0;
  for (const auto& t : terms) {
    aa += t.a * t.a;
    ar += t.a * t.r;
  }
  if (aa == 0.0) {
    if (c > 0) {
      if (!std::isfinite(lo)) throw UnboundedUpdateError("update is unbounded below");
      return lo;
    }
    if (c < 0) {
      if (!std::isfinite(hi)) throw UnboundedUpdateError("update is unbounded below");
      return hi;
    }
    return std::clamp(0.0, lo, hi);
  }
  return std::clamp((-c / beta - ar) / aa, lo, hi);
}

const char* to_string(VarKind k) {
  switch (k) {
    case VarKind::N: return "n";
    case VarKind::M: return "m";
    case VarKind::Alpha: return "alpha";
    case VarKind::Interest: return "e";
    case VarKind::A: return "A";
    case VarKind::B: return "B";
    case VarKind::C: return "C";
    case VarKind::D: return "D";
    case VarKind::E: return "E";
    case VarKind::Slack: return "S";
  }
  return "?";
}

const char* reform_family_name(int family) {
  switch (family) {
    case kAdef: return "A_def";
    case kAsum: return "A_sum";
    case kBdef: return "B_def";
    case kBsum: return "B_sum";
    case kCdef: return "C_def";
    case kCsum: return "C_sum";
    case kDdef: return "D_def";
    case kDsum: return "D_sum";
    case kEdef: return "E_def";
    case kEsum: return "E_sum";
    case kRShareEqual: return "share_equal";
    case kRInterestSum: return "interest_sum";
    case kRNewArrival: return "new_arrival";
    case kROnlineArrival: return "online_arrival";
    case kRSlot: return "slot_capacity";
    default: return family_name(family);
  }
}

std::string label(const Agent& a, const Topology& t) {
  switch (a.kind) {
    case AgentKind::Ingress: return "ingress";
    case AgentKind::Egress: return "egress";
    default: return t.label(a.node);
  }
}

namespace {

// Row builder for the reformulated system.
struct Builder {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  std::vector<int> family;

  int add_row(const SparseTerms& terms, double b, int fam) {
    const int r = static_cast<int>(rhs.size());
    for (auto [v, a] : terms) trips.emplace_back(r, v, a);
    rhs.push_back(b);
    family.push_back(fam);
    return r;
  }
};

int reform_family_of(int base_family) {
  switch (base_family) {
    case kShareEqual: return kRShareEqual;
    case kInterestSum: return kRInterestSum;
    case kNewArrival: return kRNewArrival;
    case kOnlineArrival: return kROnlineArrival;
    default: return -1;
  }
}

}  // namespace

ReformulatedSystem reformulate(const ScalingProblem& p) {
  ReformulatedSystem out;
  out.topology = p.topology;
  out.base = build_overload_lp(p);
  const Topology& t = *p.topology;
  const VnfGroup& g = p.group;
  const RelaxedModel& base = out.base;
  const int nb = base.lp.num_vars();

  std::vector<double> lo, hi, cost;
  auto add_var = [&](std::string name, VarKind k, int node, int inst, double l, double h, double c, int bv) {
    out.var_names.push_back(std::move(name));
    out.kind.push_back(k);
    out.node.push_back(node);
    out.instance.push_back(inst);
    out.base_var.push_back(bv);
    lo.push_back(l);
    hi.push_back(h);
    cost.push_back(c);
    return static_cast<int>(lo.size()) - 1;
  };

  // Relaxed-model variables keep their indices.
  std::vector<VarKind> bkind(static_cast<std::size_t>(nb), VarKind::N);
  std::vector<int> bnode(static_cast<std::size_t>(nb), -1), binst(static_cast<std::size_t>(nb), -1);
  for (std::size_t d = 0; d < base.flows.size(); ++d) {
    const auto& f = base.flows[d];
    for (std::size_t a = 0; a < f.n_arcs.size(); ++a) {
      bkind[static_cast<std::size_t>(f.n_var[a])] = VarKind::N;
      bnode[static_cast<std::size_t>(f.n_var[a])] = f.n_arcs[a].from;
      binst[static_cast<std::size_t>(f.n_var[a])] = static_cast<int>(d);
    }
    for (std::size_t a = 0; a < f.m_arcs.size(); ++a) {
      bkind[static_cast<std::size_t>(f.m_var[a])] = VarKind::M;
      bnode[static_cast<std::size_t>(f.m_var[a])] = f.m_arcs[a].from;
      binst[static_cast<std::size_t>(f.m_var[a])] = static_cast<int>(d);
    }
    const auto& inst = base.instances[d];
    for (std::size_t i = 0; i < inst.domain.size(); ++i) {
      for (auto [v, k] : {std::pair{inst.alpha_var[i], VarKind::Alpha}, std::pair{inst.interest_var[i], VarKind::Interest}}) {
        bkind[static_cast<std::size_t>(v)] = k;
        bnode[static_cast<std::size_t>(v)] = inst.domain[i];
        binst[static_cast<std::size_t>(v)] = static_cast<int>(d);
      }
    }
  }
  for (int j = 0; j < nb; ++j) {
    const LpVar& v = base.lp.var(j);
    add_var(v.name, bkind[static_cast<std::size_t>(j)], bnode[static_cast<std::size_t>(j)],
            binst[static_cast<std::size_t>(j)], v.lower, v.upper, base.lp.costs()[j], j);
  }

  Builder rows;
  std::vector<int> def_row;
  auto aux = [&](std::string name, VarKind k, int node, int inst, double l, double h) {
    const int v = add_var(std::move(name), k, node, inst, l, h, 0.0, -1);
    def_row.resize(lo.size(), -1);
    return v;
  };
  auto find_arc = [](const std::vector<Arc>& arcs, const std::vector<int>& vars, int from, int to) {
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      if (arcs[a].from == from && arcs[a].to == to) return vars[a];
    }
    return -1;
  };

  SparseTerms d_sum, e_sum;
  for (std::size_t d = 0; d < base.flows.size(); ++d) {
    const auto& f = base.flows[d];
    const int di = static_cast<int>(d);
    const std::string tag = "_" + std::to_string(d + 1);
    // Antisymmetric link flows at switches.
    for (int s = t.num_pms(); s < t.num_nodes(); ++s) {
      for (int pass = 0; pass < 2; ++pass) {
        const auto& arcs = pass == 0 ? f.n_arcs : f.m_arcs;
        const auto& vars = pass == 0 ? f.n_var : f.m_var;
        SparseTerms sum;
        for (int j : t.adjacent(s)) {
          const int out_v = find_arc(arcs, vars, s, j);
          const int in_v = find_arc(arcs, vars, j, s);
          if (out_v < 0 && in_v < 0) continue;
          const int v = aux((pass == 0 ? "A" : "B") + tag + "_" + t.label(s) + "_" + t.label(j),
                            pass == 0 ? VarKind::A : VarKind::B, s, di, -kInf, kInf);
          SparseTerms def;
          if (out_v >= 0) def.emplace_back(out_v, 1.0);
          if (in_v >= 0) def.emplace_back(in_v, -1.0);
          def.emplace_back(v, -1.0);
          def_row[static_cast<std::size_t>(v)] = rows.add_row(def, 0.0, pass == 0 ? kAdef : kBdef);
          sum.emplace_back(v, 1.0);
        }
        if (!sum.empty()) rows.add_row(sum, 0.0, pass == 0 ? kAsum : kBsum);
      }
    }
    // Processing at the PMs of this instance.
    for (int q : base.instances[d].domain) {
      std::vector<int> around = t.adjacent(q);
      around.insert(around.begin(), q);
      SparseTerms sum;
      for (int j : around) {
        const int m_out = find_arc(f.m_arcs, f.m_var, q, j);
        const int n_in = find_arc(f.n_arcs, f.n_var, j, q);
        if (m_out < 0 && n_in < 0) continue;
        const int v = aux("C" + tag + "_" + t.label(q) + "_" + t.label(j), VarKind::C, q, di, -kInf, kInf);
        SparseTerms def;
        if (m_out >= 0) def.emplace_back(m_out, 1.0);
        if (n_in >= 0) def.emplace_back(n_in, -g.gamma);
        def.emplace_back(v, -1.0);
        def_row[static_cast<std::size_t>(v)] = rows.add_row(def, 0.0, kCdef);
        sum.emplace_back(v, 1.0);
      }
      if (!sum.empty()) rows.add_row(sum, 0.0, kCsum);
    }
    const int dv = aux("D" + tag, VarKind::D, -1, di, 0.0, kInf);
    SparseTerms ddef;
    for (int q : g.ingress_pms) {
      for (auto term : f.n_out_of(q)) ddef.push_back(term);
    }
    ddef.emplace_back(dv, -1.0);
    def_row[static_cast<std::size_t>(dv)] = rows.add_row(ddef, 0.0, kDdef);
    d_sum.emplace_back(dv, 1.0);

    const int ev = aux("E" + tag, VarKind::E, -1, di, 0.0, kInf);
    SparseTerms edef;
    for (int q : g.egress_pms) {
      for (auto term : f.m_into(q)) edef.push_back(term);
    }
    edef.emplace_back(ev, -1.0);
    def_row[static_cast<std::size_t>(ev)] = rows.add_row(edef, 0.0, kEdef);
    e_sum.emplace_back(ev, 1.0);
  }
  rows.add_row(d_sum, p.traffic, kDsum);
  rows.add_row(e_sum, p.traffic * g.gamma, kEsum);

  // Share rows carry over unchanged; slot rows gain a slack.
  for (int i = 0; i < base.lp.num_rows(); ++i) {
    const LpRow& row = base.lp.row(i);
    const int fam = reform_family_of(row.family);
    if (fam >= 0) {
      rows.add_row(row.coeffs, row.rhs, fam);
    } else if (row.family == kSlotCapacity) {
      int q = -1;
      for (std::size_t s = 0; s < base.slot_pms.size(); ++s) {
        if (row.name == "slots_" + t.label(base.slot_pms[s])) q = base.slot_pms[s];
      }
      const int sv = aux("S_" + row.name.substr(6), VarKind::Slack, q, -1, 0.0, kInf);
      SparseTerms terms = row.coeffs;
      terms.emplace_back(sv, 1.0);
      def_row[static_cast<std::size_t>(sv)] = rows.add_row(terms, row.rhs, kRSlot);
    }
  }
  def_row.resize(lo.size(), -1);

  LinearSystem& s = out.sys;
  const int n = static_cast<int>(lo.size());
  s.A.resize(static_cast<Eigen::Index>(rows.rhs.size()), n);
  s.A.setFromTriplets(rows.trips.begin(), rows.trips.end());
  s.A.makeCompressed();
  s.b = Eigen::Map<Eigen::VectorXd>(rows.rhs.data(), static_cast<Eigen::Index>(rows.rhs.size()));
  s.c = Eigen::Map<Eigen::VectorXd>(cost.data(), n);
  s.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), n);
  s.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), n);
  s.row_family = rows.family;
  s.use_scalar_blocks();
  out.def_row = std::move(def_row);
  return out;
}

Eigen::VectorXd ReformulatedSystem::to_base(const Eigen::VectorXd& x) const {
  return x.head(base.lp.num_vars());
}

Eigen::VectorXd ReformulatedSystem::lift(const Eigen::VectorXd& base_point) const {
  const int nb = base.lp.num_vars();
  if (base_point.size() != nb) throw std::invalid_argument("point does not match the relaxed model");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.num_vars());
  x.head(nb) = base_point;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = sys.A;
  for (int v = nb; v < sys.num_vars(); ++v) {
    const int r = def_row[static_cast<std::size_t>(v)];
    double acc = sys.b[r], own = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      if (it.col() == v) {
        own = it.value();
      } else {
        acc -= it.value() * x[it.col()];
      }
    }
    x[v] = acc / own;
  }
  return x;
}

LpModel ReformulatedSystem::to_lp() const {
  LpModel lp;
  for (int j = 0; j < sys.num_vars(); ++j) lp.add_var(var_names[static_cast<std::size_t>(j)], sys.lo[j], sys.hi[j], sys.c[j]);
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = sys.A;
  for (int r = 0; r < sys.num_rows(); ++r) {
    SparseTerms terms;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      terms.emplace_back(static_cast<int>(it.col()), it.value());
    }
    lp.add_row(reform_family_name(sys.row_family[static_cast<std::size_t>(r)]) + std::string("_") + std::to_string(r),
               std::move(terms), Relation::Eq, sys.b[r], sys.row_family[static_cast<std::size_t>(r)]);
  }
  return lp;
}

AgentPartition agent_partition(const ReformulatedSystem& r) {
  const Topology& t = *r.topology;
  AgentPartition part;
  std::map<std::pair<int, int>, int> index;
  auto agent = [&](AgentKind k, int node) {
    auto [it, fresh] = index.try_emplace({static_cast<int>(k), node}, static_cast<int>(part.agents.size()));
    if (fresh) part.agents.push_back({k, node});
    return it->second;
  };
  const int n = r.sys.num_vars();
  part.owner.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const VarKind k = r.kind[static_cast<std::size_t>(v)];
    const int node = r.node[static_cast<std::size_t>(v)];
    int owner = -1;
    if (k == VarKind::D) {
      owner = agent(AgentKind::Ingress, -1);
    } else if (k == VarKind::E) {
      owner = agent(AgentKind::Egress, -1);
    } else if (node >= 0) {
      owner = agent(t.is_pm(node) ? AgentKind::PM : AgentKind::Switch, node);
    }
    if (owner < 0) throw std::logic_error("variable " + r.var_names[static_cast<std::size_t>(v)] + " has no owner");
    part.owner[static_cast<std::size_t>(v)] = owner;
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = r.sys.A;
  part.foreign_reads.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    std::set<int> others;
    for (Eigen::SparseMatrix<double>::InnerIterator it(r.sys.A, v); it; ++it) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator jt(rows, it.row()); jt; ++jt) {
        const int o = part.owner[static_cast<std::size_t>(jt.col())];
        if (o != part.owner[static_cast<std::size_t>(v)]) others.insert(o);
      }
    }
    part.foreign_reads[static_cast<std::size_t>(v)] = {others.begin(), others.end()};
  }
  return part;
}

void AdmmConfig::validate() const {
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(primal_tol >= 0)) throw std::invalid_argument("primal_tol must be nonnegative");
}

std::vector<double> ViolationNormalizer::operator()(const std::vector<double>& raw) {
  std::vector<double> out(raw.size(), 0.0);
  for (std::size_t f = 0; f < raw.size(); ++f) {
    if (raw[f] <= kNegligibleViolation) continue;  // rounding noise, not a violation
    peak_[f] = std::max(peak_[f], raw[f]);
    out[f] = peak_[f] > 0 ? std::min(1.0, raw[f] / peak_[f]) : 0.0;
  }
  return out;
}

ResidualProbe default_probe(const LinearSystem& s) {
  std::vector<int> fams = s.row_family;
  std::sort(fams.begin(), fams.end());
  fams.erase(std::unique(fams.begin(), fams.end()), fams.end());
  ResidualProbe probe;
  for (int f : fams) probe.names.push_back(reform_family_name(f));
  std::vector<int> slot(s.row_family.size());
  for (std::size_t r = 0; r < slot.size(); ++r) {
    slot[r] = static_cast<int>(std::lower_bound(fams.begin(), fams.end(), s.row_family[r]) - fams.begin());
  }
  probe.raw = [&s, slot, nf = fams.size()](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = s.A * x - s.b;
    std::vector<double> out(nf, 0.0);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      auto& o = out[static_cast<std::size_t>(slot[static_cast<std::size_t>(i)])];
      o = std::max(o, std::abs(r[i]));
    }
    return out;
  };
  probe.objective = [&s](const Eigen::VectorXd& x) { return s.c.dot(x); };
  return probe;
}

namespace {

// Unbiased draw from [0, n) using rejection, so permutations do not depend on
// the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = gen();
    if (x >= threshold) return x % n;
  }
}

constexpr double kDivergence = 1e12;

}  // namespace

AdmmResult admm_solve(const LinearSystem& s, const AdmmConfig& cfg, const ResidualProbe& probe) {
  cfg.validate();
  s.validate();
  const int n = s.num_vars();
  const int m = s.num_rows();
  const double beta = cfg.beta;

  AdmmResult res;
  Eigen::VectorXd& x = res.x;
  Eigen::VectorXd& u = res.u;
  x = cfg.x0 ? *cfg.x0 : Eigen::VectorXd::Zero(n);
  u = cfg.u0 ? *cfg.u0 : Eigen::VectorXd::Zero(m);
  if (x.size() != n || u.size() != m) throw std::invalid_argument("initial point has the wrong size");
  Eigen::VectorXd r = s.A * x - s.b;

  ViolationNormalizer normalize(probe.names.size());
  AdmmTrace& trace = res.trace;
  trace.family_names = probe.names;
  trace.initial_violations = normalize(probe.raw(x));

  const int nb = static_cast<int>(s.blocks.size());
  std::vector<int> order(static_cast<std::size_t>(nb));
  std::mt19937_64 gen(cfg.seed);
  std::vector<QuadTerm> terms;
  std::vector<double> fresh;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (int i = 0; i < nb; ++i) order[static_cast<std::size_t>(i)] = i;
    if (cfg.order == PermutationPolicy::Random) {
      for (int i = nb - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(bounded(gen, static_cast<std::uint64_t>(i) + 1))]);
      }
    }

    long messages = 0;
    for (int bi : order) {
      const auto& blk = s.blocks[static_cast<std::size_t>(bi)];
      fresh.assign(blk.size(), 0.0);
      for (std::size_t k = 0; k < blk.size(); ++k) {
        const int j = blk[k];
        terms.clear();
        for (Eigen::SparseMatrix<double>::InnerIterator e(s.A, j); e; ++e) {
          terms.push_back({e.value(), r[e.row()] - e.value() * x[j] + u[e.row()]});
        }
        fresh[k] = scalar_block_update(s.c[j], terms, s.lo[j], s.hi[j], beta);
      }
      for (std::size_t k = 0; k < blk.size(); ++k) {
        const int j = blk[k];
        const double delta = fresh[k] - x[j];
        if (delta == 0.0) continue;
        x[j] = fresh[k];
        for (Eigen::SparseMatrix<double>::InnerIterator e(s.A, j); e; ++e) r[e.row()] += e.value() * delta;
      }
      if (!probe.messages_per_block.empty()) messages += probe.messages_per_block[static_cast<std::size_t>(bi)];
    }

    r = s.A * x - s.b;
    u += r;

    IterationRecord rec;
    rec.iteration = it;
    rec.objective = probe.objective(x);
    rec.violations = normalize(probe.raw(x));
    rec.max_violation = rec.violations.empty() ? 0.0 : *std::max_element(rec.violations.begin(), rec.violations.end());
    rec.messages = messages;
    rec.permutation = order;
    if (cfg.record_iterates) {
      rec.x = x;
      rec.u = u;
    }
    const double worst = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(rec.objective) || !std::isfinite(worst) || std::abs(rec.objective) > kDivergence ||
        worst > kDivergence) {
      std::ostringstream os;
      os << "ADMM diverged at iteration " << it << ": objective " << rec.objective << ", max residual " << worst
         << ", max |x| " << x.cwiseAbs().maxCoeff() << ", max |u| " << u.cwiseAbs().maxCoeff();
      throw DivergenceError(os.str());
    }
    const bool done = rec.max_violation <= cfg.primal_tol;
    trace.iterations.push_back(std::move(rec));
    if (done) {
      trace.converged = true;
      break;
    }
  }
  return res;
}

std::vector<int> violation_families(const RelaxedModel& m) {
  std::set<int> fams;
  for (const auto& row : m.lp.rows()) fams.insert(row.family);
  return {fams.begin(), fams.end()};
}

std::vector<double> raw_violations(const RelaxedModel& m, const Eigen::VectorXd& base_point) {
  const std::vector<int> fams = violation_families(m);
  std::vector<double> out(fams.size(), 0.0);
  for (int i = 0; i < m.lp.num_rows(); ++i) {
    const LpRow& row = m.lp.row(i);
    const double v = m.lp.activity(i, base_point) - row.rhs;
    double viol = 0.0;
    switch (row.relation) {
      case Relation::Eq: viol = std::abs(v); break;
      case Relation::Le: viol = std::max(0.0, v); break;
      case Relation::Ge: viol = std::max(0.0, -v); break;
    }
    const auto f = static_cast<std::size_t>(std::lower_bound(fams.begin(), fams.end(), row.family) - fams.begin());
    out[f] = std::max(out[f], viol);
  }
  return out;
}

std::vector<std::vector<double>> normalized_violations(const RelaxedModel& m,
                                                       const std::vector<Eigen::VectorXd>& base_points) {
  ViolationNormalizer normalize(violation_families(m).size());
  std::vector<std::vector<double>> out;
  for (const auto& p : base_points) out.push_back(normalize(raw_violations(m, p)));
  return out;
}

ResidualProbe overload_probe(const ReformulatedSystem& r) {
  ResidualProbe probe;
  for (int f : violation_families(r.base)) probe.names.push_back(family_name(f));
  probe.raw = [&r](const Eigen::VectorXd& x) { return raw_violations(r.base, r.to_base(x)); };
  probe.objective = [&r](const Eigen::VectorXd& x) { return r.sys.c.dot(x); };
  const AgentPartition part = agent_partition(r);
  for (const auto& blk : r.sys.blocks) {
    std::set<int> readers;
    for (int v : blk) readers.insert(part.foreign_reads[static_cast<std::size_t>(v)].begin(),
                                     part.foreign_reads[static_cast<std::size_t>(v)].end());
    probe.messages_per_block.push_back(static_cast<long>(readers.size()));
  }
  return probe;
}

AdmmResult run(const ScalingProblem& p, const AdmmConfig& cfg) {
  const ReformulatedSystem r = reformulate(p);
  return admm_solve(r.sys, cfg, overload_probe(r));
}

double relative_gap(double value, double optimum) {
  const double diff = std::abs(value - optimum);
  if (diff <= 1e-12) return 0.0;
  return diff / std::max(std::abs(optimum), 1e-12);
}

GapReport compare_solvers(const ScalingProblem& p, const AdmmConfig& cfg) {
  const ReformulatedSystem r = reformulate(p);
  const LpSolution central = solve(r.base.lp);
  if (!central.optimal()) throw std::runtime_error(std::string("central LP is ") + to_string(central.status));
  GapReport rep;
  rep.lp_optimum = central.objective_value;
  AdmmResult res = admm_solve(r.sys, cfg, overload_probe(r));
  for (const auto& it : res.trace.iterations) {
    rep.objective.push_back(it.objective);
    rep.gap.push_back(relative_gap(it.objective, rep.lp_optimum));
  }
  rep.final_gap = rep.gap.empty() ? relative_gap(0.0, rep.lp_optimum) : rep.gap.back();
  rep.trace = std::move(res.trace);
  return rep;
}

std::string trace_csv(const AdmmTrace& t) {
  std::ostringstream os;
  os.precision(12);
  os << "iteration,objective";
  for (const auto& f : t.family_names) os << ',' << f;
  os << ",max_violation,messages\n";
  for (const auto& it : t.iterations) {
    os << it.iteration << ',' << it.objective;
    for (double v : it.violations) os << ',' << v;
    os << ',' << it.max_violation << ',' << it.messages << '\n';
  }
  return os.str();
}

std::string permutation_log(const AdmmTrace& t) {
  std::ostringstream os;
  for (const auto& it : t.iterations) {
    os << it.iteration;
    for (int b : it.permutation) os << ' ' << b;
    os << '\n';
  }
  return os.str();
}

}  // namespace chainscale
