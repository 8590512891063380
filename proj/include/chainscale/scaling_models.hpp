#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainscale/chain_state.hpp"
#include "chainscale/lp.hpp"
#include "chainscale/topology.hpp"

namespace chainscale {

enum class ScalingMode { Overload, Underload };

const char* to_string(ScalingMode m);

// Deployment penalties: `activation` is charged per offline VM brought up,
// `retention` is credited per online VM kept running.
struct Penalties {
  double activation = 10.0;
  double retention = 1e4;

  static Penalties overload() { return {10.0, 1e4}; }
  static Penalties underload() { return {1e6, -1e4}; }
  static Penalties for_mode(ScalingMode m) { return m == ScalingMode::Overload ? overload() : underload(); }
};

struct CostWeights {
  double deployment = 1.0;
  double forwarding = 1.0;
};

struct ScalingProblem {
  std::shared_ptr<const Topology> topology;
  VnfGroup group;
  double traffic = 0.0;
  int v_star = 1;
  ScalingMode mode = ScalingMode::Overload;
  double epsilon = 0.01;
  CostWeights weights;
  Penalties penalties = Penalties::overload();
  // PMs x resources, resources available to this group's VMs. Empty means
  // every PM can take every VM of the group.
  Eigen::MatrixXd pm_capacity;

  void validate() const;
};

// Largest share bound that keeps phi * omega * T strictly below every VM
// capacity, capped at 1.
double auto_phi(const VnfGroup& g, double traffic);

// A directed hop. from == to is the internal hand-off between two VNFs on
// the same PM.
struct Arc {
  int from = 0;
  int to = 0;
};

// Flow variables of one commodity (one VNF instance). `n` carries traffic
// towards the instance, `m` the processed traffic towards the egress.
struct FlowVars {
  std::vector<Arc> n_arcs, m_arcs;
  std::vector<int> n_var, m_var;

  SparseTerms n_into(int node) const;
  SparseTerms n_out_of(int node) const;
  SparseTerms m_into(int node) const;
  SparseTerms m_out_of(int node) const;
};

// Row families. The first block mirrors the relaxed models, the second the
// extra rows of the exact joint model.
enum Family : int {
  kSwitchUnprocessed = 1,  // conservation of n at switches
  kSwitchProcessed,        // conservation of m at switches
  kPmProcessing,           // m out = gamma * n in at PMs
  kIngressTotal,           // n leaving the ingress = T
  kEgressTotal,            // m reaching the egress = T gamma
  kShareEqual,             // new instances split traffic evenly
  kInterestSum,            // interests of an instance add up to its share
  kNewArrival,
  kOnlineArrival,
  kSlotCapacity,           // relaxed per-PM capacity
  kShareCoupling,          // eps b <= alpha <= phi b
  kShareCoverage,          // sum alpha = 1
  kArrival,                // incoming n = T alpha
  kResourceCapacity,
  kBandwidth,
  kPlacement,              // a VM runs on at most one PM
  kFamilyCount
};

const char* family_name(int family);

// Adds n/m variables for one commodity plus switch conservation and PM
// processing rows. Hop availability: n leaves PMs only at ingress PMs and
// enters only PMs of `domain`; m leaves only `domain` PMs and enters only
// egress PMs.
FlowVars add_flow_network(LpModel& lp, const Topology& t, const std::vector<int>& ingress,
                          const std::vector<int>& egress, const std::vector<int>& domain, double gamma,
                          double cost_weight, const std::string& tag);

struct RelaxedInstance {
  int vm_id = -1;       // online VM behind this instance, -1 for a relaxed slot
  int fixed_host = -1;  // host PM of an online instance in the overload model
  std::vector<int> domain;
  std::vector<int> alpha_var;  // parallel to domain
  std::vector<int> interest_var;
};

// The overload or underload LP together with its variable layout.
struct RelaxedModel {
  ScalingMode mode = ScalingMode::Overload;
  LpModel lp;
  std::vector<RelaxedInstance> instances;
  std::vector<FlowVars> flows;
  std::vector<int> slot_pms;
  std::vector<double> slot_capacity;  // phi * slots, parallel to slot_pms
  double traffic = 0.0;
  double gamma = 1.0;
  double phi = 1.0;
};

RelaxedModel build_overload_lp(const ScalingProblem& p);
RelaxedModel build_underload_lp(const ScalingProblem& p);

struct ArcFlow {
  int instance = 0;
  Arc arc;
  double n = 0.0;
  double m = 0.0;
};

double forwarding_cost_of(const std::vector<ArcFlow>& flows, const Topology& t);

enum class VmAction { Kept, Launched, Terminated };

const char* to_string(VmAction a);

struct InstanceAssignment {
  int instance = -1;  // -1 for terminated VMs
  int vm_id = -1;
  int host = -1;
  VmAction action = VmAction::Kept;
  double share = 0.0;
  double interest = 0.0;
};

struct ScalingDecision {
  std::vector<InstanceAssignment> assignments;  // kept and launched, by instance
  std::vector<InstanceAssignment> terminated;
  std::vector<ArcFlow> flows;  // nonzero hops only
  double forwarding_cost = 0.0;
  std::optional<double> baseline_cost;
  double cost_delta = 0.0;  // (cost - baseline) / baseline
  std::vector<std::string> warnings;

  std::vector<int> launched_hosts() const;
  std::vector<int> kept_hosts() const;
  std::vector<int> terminated_hosts() const;
};

// The model cannot have a feasible point, e.g. more new instances than
// candidate slots.
class InfeasibleModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Host of each required instance is the PM with the largest interest (ties to
// the lower PM index) among PMs that still have a free slot.
ScalingDecision decode(const LpSolution& solution, const RelaxedModel& model, const ScalingProblem& p,
                       std::optional<double> baseline_cost = std::nullopt);

// Forwarding cost of the pre-event configuration: the online VMs only, at the
// pre-event traffic, routed by the overload LP with no new instance.
double baseline_forwarding_cost(const ScalingProblem& p, double pre_event_traffic);

// CSV renderings: one row per instance, and one row per (hop, instance, kind).
std::string decision_csv(const ScalingDecision& d, const Topology& t);
std::string flows_csv(const ScalingDecision& d, const Topology& t);

}  // namespace chainscale
