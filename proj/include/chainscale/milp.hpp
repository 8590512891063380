#pragma once

#include <string>
#include <vector>

#include "chainscale/lp.hpp"
#include "chainscale/scaling_models.hpp"

namespace chainscale {

// Joint placement and routing model with binary b[p][j] (VM j runs on PM p).
// VM index j runs over the online VMs first, then the offline pool. Online VMs
// can only sit on their current host and offline VMs only on candidate PMs
// (every PM when the candidate set is empty); the other b are fixed to zero.
struct MilpProblem {
  LpModel lp;  // template with b relaxed to [0, 1]
  std::vector<int> binaries;
  std::vector<std::vector<int>> b_var;      // [pm][vm]
  std::vector<std::vector<int>> alpha_var;  // [pm][vm]
  std::vector<FlowVars> flows;              // per vm
  std::vector<VmInstance> vms;
  int num_online = 0;
  Penalties penalties;
  CostWeights weights;
  std::shared_ptr<const Topology> topology;

  bool is_online(int vm) const { return vm < num_online; }
  // Binaries that are not fixed by the template bounds.
  std::vector<int> free_binaries() const;
};

MilpProblem build_milp(const ScalingProblem& p);

struct PlacementEntry {
  int vm_id = 0;
  bool online = false;  // was running before the decision
  int host = -1;        // -1 when the VM ends up off
};

// Activation penalty for every offline VM switched on minus the retention
// credit for every online VM kept.
double deployment_cost(const std::vector<PlacementEntry>& placement, const Penalties& penalties);

enum class MilpStatus { Optimal, Infeasible, BudgetExhausted };

const char* to_string(MilpStatus s);

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  bool proven = false;        // false when the node budget ran out
  bool has_incumbent = false;
  Eigen::VectorXd point;
  std::vector<PlacementEntry> placement;
  double deployment_cost = 0.0;
  double forwarding_cost = 0.0;
  double total = kInf;
  double root_bound = -kInf;
  int nodes = 0;
};

inline constexpr int kDefaultNodeBudget = 200000;

// Depth-first branch and bound over the binaries. Branches on the most
// fractional b (ties to the lowest index) and re-sorts the open list by bound
// every 16 nodes.
// Running past `deadline` ends the search like an exhausted node budget.
MilpSolution solve_milp(const MilpProblem& p, int node_budget = kDefaultNodeBudget, Deadline deadline = std::nullopt);

// Evaluates the template with the given binaries fixed to `values` (0/1, in
// `binaries` order). Returns the LP solution of the remaining continuous part.
LpSolution solve_fixed(const MilpProblem& p, const std::vector<int>& values);

// Fills placement and cost fields from a point with integral binaries.
void describe(const MilpProblem& p, const Eigen::VectorXd& x, MilpSolution& out);

std::string placement_csv(const MilpProblem& p, const MilpSolution& s);
std::string milp_flows_csv(const MilpProblem& p, const MilpSolution& s);

}  // namespace chainscale
