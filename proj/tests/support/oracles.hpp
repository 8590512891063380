#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. None of these go through the code they check.

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "chainscale/chain_state.hpp"
#include "chainscale/lp.hpp"
#include "chainscale/milp.hpp"
#include "chainscale/rpadmm.hpp"
#include "chainscale/scaling_models.hpp"
#include "chainscale/topology.hpp"

namespace chainscale::oracle {

inline VmInstance make_vm(int id, std::optional<int> host, double cap = 1.0) {
  VmInstance v;
  v.id = id;
  v.host = host;
  v.capacity = Eigen::VectorXd::Constant(1, cap);
  return v;
}

// 4-fat-tree fixture with 1-based PM numbers, three spare VMs and omega 0.01.
inline ScalingProblem fat4_problem(const std::vector<int>& hosts, int ingress, int egress,
                                     const std::vector<int>& candidates, double gamma, double traffic, int v_star,
                                     ScalingMode mode) {
  static const auto topo = std::make_shared<const Topology>(build_fat_tree(4));
  ScalingProblem p;
  p.topology = topo;
  p.mode = mode;
  p.penalties = Penalties::for_mode(mode);
  VnfGroup& g = p.group;
  int id = 1;
  for (int h : hosts) g.online.push_back(make_vm(id++, h - 1));
  for (int i = 0; i < 3; ++i) g.offline_pool.push_back(make_vm(id++, std::nullopt));
  g.ingress_pms = {ingress - 1};
  g.egress_pms = {egress - 1};
  for (int c : candidates) g.candidate_pms.push_back(c - 1);
  g.gamma = gamma;
  g.omega = Eigen::VectorXd::Constant(1, 0.01);
  g.thresholds = Thresholds::uniform(1);
  g.phi = auto_phi(g, traffic);
  p.traffic = traffic;
  p.v_star = v_star;
  return p;
}

inline std::vector<int> pm_range(int first, int last) {
  std::vector<int> out;
  for (int p = first; p <= last; ++p) out.push_back(p);
  return out;
}

// The geometry used for the distributed-solver checks: VMs on P3, P5, P6,
// egress P2, candidates P2..P16, overload to v* = 4 at T = 315.
inline ScalingProblem case4_overload() {
  return fat4_problem({3, 5, 6}, 1, 2, pm_range(2, 16), 1.0, 315.0, 4, ScalingMode::Overload);
}

// Random 2-fat-tree placement instance with at most `max_free` free binaries.
inline ScalingProblem random_k2_problem(std::mt19937_64& rng, ScalingMode mode, int max_free = 12) {
  static const auto topo = std::make_shared<const Topology>(build_fat_tree(2));
  const int np = topo->num_pms();
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (;;) {
    ScalingProblem p;
    p.topology = topo;
    p.mode = mode;
    p.penalties = Penalties::for_mode(mode);
    VnfGroup& g = p.group;
    const int n_on = pick(1, 2);
    const int n_off = pick(1, 2);
    int id = 1;
    for (int i = 0; i < n_on; ++i) g.online.push_back(make_vm(id++, pick(0, np - 1)));
    for (int i = 0; i < n_off; ++i) g.offline_pool.push_back(make_vm(id++, std::nullopt));
    for (int q = 0; q < np; ++q) {
      if (pick(0, 1)) g.candidate_pms.push_back(q);
    }
    if (g.candidate_pms.empty()) g.candidate_pms.push_back(pick(0, np - 1));
    if (n_on + n_off * static_cast<int>(g.candidate_pms.size()) > max_free) continue;
    g.ingress_pms = {pick(0, np - 1)};
    g.egress_pms = {pick(0, np - 1)};
    const double gammas[] = {0.8, 1.0, 1.2};
    g.gamma = gammas[pick(0, 2)];
    g.omega = Eigen::VectorXd::Constant(1, 0.01);
    g.thresholds = Thresholds::uniform(1);
    p.traffic = std::uniform_real_distribution<double>(40.0, 160.0)(rng);
    g.phi = auto_phi(g, p.traffic);
    p.epsilon = std::min(0.01, g.phi);
    p.v_star = mode == ScalingMode::Overload ? n_on + 1 : 1;
    return p;
  }
}

struct Enumerated {
  std::vector<int> values;  // per free binary
  double total = kInf;
  bool all_online_kept = true;
  bool any_offline_on = false;
};

struct BruteForce {
  std::vector<int> free;           // free binary variables
  std::vector<bool> free_online;   // parallel: binary belongs to an online VM
  std::vector<Enumerated> feasible;
  double best = kInf;
  std::size_t best_index = 0;
};

// Solves the continuous part once for every 0/1 assignment of the free
// binaries, straight from the template model.
inline BruteForce brute_force(const MilpProblem& mp) {
  BruteForce out;
  for (std::size_t q = 0; q < mp.b_var.size(); ++q) {
    for (std::size_t j = 0; j < mp.b_var[q].size(); ++j) {
      const int v = mp.b_var[q][j];
      if (mp.lp.var(v).upper > mp.lp.var(v).lower) {
        out.free.push_back(v);
        out.free_online.push_back(static_cast<int>(j) < mp.num_online);
      }
    }
  }
  const std::size_t nf = out.free.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nf); ++mask) {
    LpModel lp = mp.lp;
    Enumerated e;
    e.values.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const int bit = static_cast<int>((mask >> i) & 1U);
      e.values[i] = bit;
      lp.set_bounds(out.free[i], bit, bit);
      if (out.free_online[i] && !bit) e.all_online_kept = false;
      if (!out.free_online[i] && bit) e.any_offline_on = true;
    }
    const LpSolution s = solve(lp);
    if (!s.optimal()) continue;
    e.total = s.objective_value;
    if (e.total < out.best) {
      out.best = e.total;
      out.best_index = out.feasible.size();
    }
    out.feasible.push_back(std::move(e));
  }
  return out;
}

// Minimizer of c x + beta/2 sum (a x + r)^2 on a uniform grid over [lo, hi].
inline double grid_argmin(double c, const std::vector<QuadTerm>& terms, double lo, double hi, double beta,
                          double step = 1e-4) {
  auto f = [&](double x) {
    double q = 0.0;
    for (const auto& t : terms) q += (t.a * x + t.r) * (t.a * x + t.r);
    return c * x + 0.5 * beta * q;
  };
  double best_x = lo, best_f = f(lo);
  const long n = static_cast<long>(std::floor((hi - lo) / step));
  for (long i = 1; i <= n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  if (f(hi) < best_f) best_x = hi;
  return best_x;
}

// Classic two-block scaled ADMM for min c'x, A1 x1 + A2 x2 = b, box bounds,
// with each block's subproblem solved through its normal equations and then
// clamped. Valid when the columns inside each block are orthogonal.
struct TwoBlockIterate {
  Eigen::VectorXd x, u;
};

inline std::vector<TwoBlockIterate> two_block_admm(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                                   const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                                                   const Eigen::VectorXd& hi, const std::vector<int>& block1,
                                                   const std::vector<int>& block2, double beta, int iters) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(c.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(b.size());
  auto update = [&](const std::vector<int>& blk) {
    const auto n = static_cast<Eigen::Index>(blk.size());
    Eigen::MatrixXd Ab(A.rows(), n);
    Eigen::VectorXd cb(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Ab.col(k) = A.col(blk[static_cast<std::size_t>(k)]);
      cb[k] = c[blk[static_cast<std::size_t>(k)]];
      x[blk[static_cast<std::size_t>(k)]] = 0.0;
    }
    const Eigen::VectorXd rest = A * x - b + u;
    const Eigen::VectorXd sol = (beta * Ab.transpose() * Ab).ldlt().solve(-cb - beta * Ab.transpose() * rest);
    for (Eigen::Index k = 0; k < n; ++k) {
      const int j = blk[static_cast<std::size_t>(k)];
      x[j] = std::clamp(sol[k], lo[j], hi[j]);
    }
  };
  std::vector<TwoBlockIterate> out;
  for (int it = 0; it < iters; ++it) {
    update(block1);
    update(block2);
    u += A * x - b;
    out.push_back({x, u});
  }
  return out;
}

// Largest conservation error of any commodity in a relaxed-model point,
// recomputed from the arc lists: switches balance, plain PMs emit gamma
// times what they receive.
inline double conservation_residual(const ScalingProblem& p, const RelaxedModel& rm, const Eigen::VectorXd& x) {
  const Topology& t = *p.topology;
  const auto& ing = p.group.ingress_pms;
  const auto& egr = p.group.egress_pms;
  double worst = 0.0;
  for (const FlowVars& f : rm.flows) {
    std::vector<double> n_bal(static_cast<std::size_t>(t.num_nodes()), 0.0), m_bal = n_bal, n_in = n_bal, m_out = n_bal;
    for (std::size_t a = 0; a < f.n_arcs.size(); ++a) {
      const double v = x[f.n_var[a]];
      const auto to = static_cast<std::size_t>(f.n_arcs[a].to), from = static_cast<std::size_t>(f.n_arcs[a].from);
      n_bal[to] += v;
      n_bal[from] -= v;
      if (t.is_pm(f.n_arcs[a].to)) n_in[to] += v;
    }
    for (std::size_t a = 0; a < f.m_arcs.size(); ++a) {
      const double v = x[f.m_var[a]];
      const auto to = static_cast<std::size_t>(f.m_arcs[a].to), from = static_cast<std::size_t>(f.m_arcs[a].from);
      m_bal[to] += v;
      m_bal[from] -= v;
      if (t.is_pm(f.m_arcs[a].from)) m_out[from] += v;
    }
    for (int node = 0; node < t.num_nodes(); ++node) {
      const auto i = static_cast<std::size_t>(node);
      if (t.is_switch(node)) worst = std::max({worst, std::abs(n_bal[i]), std::abs(m_bal[i])});
    }
    for (int q = 0; q < t.num_pms(); ++q) {
      const bool edge = std::count(ing.begin(), ing.end(), q) > 0 || std::count(egr.begin(), egr.end(), q) > 0;
      const auto i = static_cast<std::size_t>(q);
      if (!edge) worst = std::max(worst, std::abs(m_out[i] - p.group.gamma * n_in[i]));
    }
  }
  return worst;
}

// Total traffic share of a relaxed-model point. An instance repeats its share
// on every PM of its domain, so each instance counts once.
inline double share_total(const RelaxedModel& rm, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (const auto& inst : rm.instances) s += x[inst.alpha_var.front()];
  return s;
}

}  // namespace chainscale::oracle
