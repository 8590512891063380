#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chainscale {

// Utilization cutoffs per resource type, as fractions of capacity.
// Must satisfy cold < warm < hot component-wise.
struct Thresholds {
  Eigen::VectorXd hot;
  Eigen::VectorXd warm;
  Eigen::VectorXd cold;

  static Thresholds uniform(int num_resources, double hot = 0.90, double warm = 0.80, double cold = 0.30);
  int num_resources() const { return static_cast<int>(hot.size()); }
  void validate() const;
};

struct VmInstance {
  int id = 0;
  int vnf_type = 0;
  int chain = 0;
  std::optional<int> host;  // PM index (0-based), empty when offline
  Eigen::VectorXd capacity;  // u_{k,r}
  std::optional<Eigen::VectorXd> utilization;  // fraction of capacity, online only

  bool online() const { return host.has_value(); }
};

// The set of VMs serving one VNF of a chain, with its neighbours in the chain
// and the scaling parameters of that VNF.
struct VnfGroup {
  int chain = 0;
  int vnf_type = 0;
  std::vector<VmInstance> online;
  std::vector<VmInstance> offline_pool;
  std::vector<int> ingress_pms;
  std::vector<int> egress_pms;
  Thresholds thresholds;
  double gamma = 1.0;
  double phi = 1.0;
  Eigen::VectorXd omega;
  std::vector<int> candidate_pms;    // PMs able to host a new instance
  std::map<int, int> candidate_slots;  // new instances a candidate can take; default 1

  // Distinct hosts of the online VMs, ascending.
  std::vector<int> host_set() const;
  int slots_on(int pm) const;
  int num_resources() const { return static_cast<int>(omega.size()); }
};

struct MonitorConfig {
  double tau = 5.0;  // seconds between utilization samples
};

enum class ChainState { Normal, Underload, Overload };

const char* to_string(ChainState s);

class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ChainState classify_group(const VnfGroup& g);

struct ChainClassification {
  ChainState state = ChainState::Normal;
  std::optional<std::size_t> trigger;  // index of the group that set the state
};

ChainClassification classify_chain(const std::vector<VnfGroup>& groups);

// Instances needed for traffic rate T: max over resources of ceil(T * omega / u),
// never below one.
int required_instances(const VnfGroup& g, double traffic);

}  // namespace chainscale
