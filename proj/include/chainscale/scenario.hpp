#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chainscale/chain_state.hpp"
#include "chainscale/milp.hpp"
#include "chainscale/rpadmm.hpp"
#include "chainscale/scaling_models.hpp"
#include "chainscale/topology.hpp"

namespace chainscale {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Raised when the selected model has no feasible point.
class ScenarioInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TopologySpec {
  int k = 4;
  int pms_per_rack = 2;
  LayerCosts costs;
  double bandwidth = kUnlimitedBandwidth;
};

struct GroupSpec {
  std::string name;
  VnfGroup group;
  bool target = false;
  std::optional<double> phi;  // empty: derived from the event traffic
};

// Traffic event at the target group. Overload multiplies the pre-event rate
// by 1.5 per step, underload halves it per step.
struct EventSpec {
  enum class Kind { None, Overload, Underload, Explicit } kind = Kind::None;
  int steps = 0;
  double traffic = 0.0;  // Explicit only

  double apply(double pre_event) const;
};

enum SolverMask : unsigned { kSolverLp = 1, kSolverMilp = 2, kSolverAdmm = 4 };

struct SolverSpec {
  unsigned mask = kSolverLp;
  AdmmConfig admm;
  int node_budget = kDefaultNodeBudget;
};

struct Expectation {
  std::string key;
  std::string value;
  int line = 0;
};

struct Scenario {
  std::string name;
  std::string source;
  double tau = 5.0;
  TopologySpec topology;
  std::vector<GroupSpec> groups;
  double traffic = 0.0;  // pre-event rate
  EventSpec event;
  SolverSpec solver;
  double epsilon = 0.01;
  CostWeights weights;
  std::optional<Penalties> overload_penalties, underload_penalties;
  std::vector<std::pair<std::vector<int>, Eigen::VectorXd>> pm_capacity;  // (PMs, per-resource capacity)
  std::vector<Expectation> expectations;
};

Scenario parse_scenario(std::istream& in, const std::string& source = "<input>");
Scenario load_scenario(const std::filesystem::path& path);

// "P3" -> 2, "P3-P16" -> 2..15, "all" -> every PM, comma lists allowed.
std::vector<int> parse_pm_list(const std::string& text, int num_pms);
std::string pm_list(const std::vector<int>& pms);

struct RunOverrides {
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<unsigned> solvers;
};

unsigned parse_solver_mask(const std::string& text);

struct ExpectationResult {
  Expectation expectation;
  bool passed = false;
  std::string actual;
};

struct ModelStats {
  std::string model;
  int variables = 0;
  int constraints = 0;
  double seconds = 0.0;
  std::string status;
};

struct RunReport {
  std::string scenario;
  std::shared_ptr<const Topology> topology;
  ChainState state = ChainState::Normal;
  std::optional<std::size_t> trigger;
  std::string group;
  double pre_traffic = 0.0;
  double traffic = 0.0;
  int v_star = 0;
  std::optional<ScalingMode> mode;
  std::string model;
  std::string old_config, new_config;
  std::optional<ScalingDecision> decision;
  std::optional<MilpSolution> milp;
  std::optional<MilpProblem> milp_problem;
  std::optional<GapReport> admm;
  std::vector<ModelStats> stats;
  std::optional<double> normalized_cost;  // baseline over the largest baseline of a batch
  std::vector<std::string> notes;
  std::vector<ExpectationResult> expectations;

  bool expectations_passed() const;
};

ScalingProblem make_problem(const Scenario& s, std::shared_ptr<const Topology> topology, std::size_t group,
                            ScalingMode mode);

RunReport run_scenario(const Scenario& s, const RunOverrides& overrides = {});

// Fills normalized_cost over a batch of reports.
void normalize_costs(std::vector<RunReport>& reports);

std::string format_report(const RunReport& r);

// Writes report.txt, decisions.csv, flows.csv and, when present,
// placement.csv, milp_flows.csv, trace.csv and permutations.txt.
std::vector<std::filesystem::path> write_outputs(const RunReport& r, const std::filesystem::path& dir);

struct SweepRow {
  int k = 0;
  int switches = 0;
  int pms = 0;
  ModelStats milp, overload, underload;
  bool milp_timed_out = false, overload_timed_out = false, underload_timed_out = false;
};

// Reference counts and timings for the same topologies, for side-by-side
// display; nullopt where no reference exists.
struct SweepReference {
  int k;
  int switches, pms, milp_variables, milp_constraints, overload_constraints, underload_constraints;
  std::optional<double> milp_seconds, overload_seconds, underload_seconds;
};

const std::vector<SweepReference>& sweep_reference();

inline constexpr const char* kTimeBudgetEnv = "CHAINSCALE_TIME_BUDGET";
double time_budget_from_env(double fallback = 1200.0);

std::vector<SweepRow> sweep_topologies(const std::vector<int>& ks, double budget_seconds, bool solve_models = true);
std::string format_sweep(const std::vector<SweepRow>& rows);

GapReport compare_scenario(const Scenario& s, const RunOverrides& overrides = {});

}  // namespace chainscale
