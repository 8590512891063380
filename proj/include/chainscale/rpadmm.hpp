#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "chainscale/lp.hpp"
#include "chainscale/scaling_models.hpp"

namespace chainscale {

// min c'x  s.t.  A x = b,  lo <= x <= hi.
// `blocks` partitions the variables; a block with several variables must have
// mutually orthogonal columns so that its joint update splits into scalars.
struct LinearSystem {
  Eigen::SparseMatrix<double> A;  // column-major
  Eigen::VectorXd b, c, lo, hi;
  std::vector<int> row_family;
  std::vector<std::vector<int>> blocks;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  void use_scalar_blocks();
  void validate() const;
};

class UnboundedUpdateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadTerm {
  double a = 0.0;
  double r = 0.0;
};

// argmin over [lo, hi] of  c x + (beta / 2) sum_t (a_t x + r_t)^2.
double scalar_block_update(double c, const std::vector<QuadTerm>& terms, double lo, double hi, double beta);

enum class VarKind { N, M, Alpha, Interest, A, B, C, D, E, Slack };

const char* to_string(VarKind k);

// Row families of the reformulated model, grouped by the multiplier they carry.
enum ReformFamily : int {
  kAdef = 101,  // n_sj - n_js - A_sj = 0
  kAsum,        // sum_j A_sj = 0
  kBdef,
  kBsum,
  kCdef,        // m_pj - gamma n_jp - C_pj = 0
  kCsum,
  kDdef,        // ingress outflow - D_d = 0
  kDsum,        // sum_d D_d = T
  kEdef,
  kEsum,        // sum_d E_d = T gamma
  kRShareEqual,
  kRInterestSum,
  kRNewArrival,
  kROnlineArrival,
  kRSlot,       // slot rows with slack
};

const char* reform_family_name(int family);

enum class AgentKind { Switch, PM, Ingress, Egress };

struct Agent {
  AgentKind kind = AgentKind::Switch;
  int node = -1;  // flat node, -1 for the ingress and egress agents

  friend bool operator==(const Agent&, const Agent&) = default;
};

std::string label(const Agent& a, const Topology& t);

// The auxiliary-variable form of the overload model, ready for a
// distributed solve. Keeps the relaxed model it came from so iterates can be
// read back as n, m, alpha and e.
struct ReformulatedSystem {
  LinearSystem sys;
  RelaxedModel base;
  std::shared_ptr<const Topology> topology;
  std::vector<std::string> var_names;
  std::vector<VarKind> kind;
  std::vector<int> node;      // node the variable lives at (tail for flows)
  std::vector<int> instance;  // -1 for slacks
  std::vector<int> base_var;  // matching variable of the relaxed model, -1 for auxiliaries
  std::vector<int> def_row;   // row that defines an auxiliary, -1 otherwise

  // Relaxed-model point obtained by dropping the auxiliaries.
  Eigen::VectorXd to_base(const Eigen::VectorXd& x) const;
  // Auxiliary-form point that extends a relaxed-model point.
  Eigen::VectorXd lift(const Eigen::VectorXd& base_point) const;
  LpModel to_lp() const;
};

ReformulatedSystem reformulate(const ScalingProblem& p);

struct AgentPartition {
  std::vector<Agent> agents;
  std::vector<int> owner;  // per variable, index into agents
  // Agents other than the owner whose variables a block update reads.
  std::vector<std::vector<int>> foreign_reads;
};

AgentPartition agent_partition(const ReformulatedSystem& r);

enum class PermutationPolicy { Random, Identity };

struct AdmmConfig {
  double beta = 5.0;
  int max_iters = 25;
  double primal_tol = 1e-3;
  std::uint64_t seed = 1;
  PermutationPolicy order = PermutationPolicy::Random;
  bool record_iterates = false;  // keep x and u per iteration for replay
  std::optional<Eigen::VectorXd> x0;
  std::optional<Eigen::VectorXd> u0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::vector<double> violations;  // normalized, per family
  double max_violation = 0.0;
  long messages = 0;
  std::vector<int> permutation;
  Eigen::VectorXd x, u;  // only when recorded
};

struct AdmmTrace {
  std::vector<std::string> family_names;
  std::vector<IterationRecord> iterations;
  std::vector<double> initial_violations;
  bool converged = false;
};

struct AdmmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd u;  // scaled duals
  AdmmTrace trace;
};

// Per-family raw residuals (max |residual|) at a point, plus their names.
struct ResidualProbe {
  std::vector<std::string> names;
  std::function<std::vector<double>(const Eigen::VectorXd&)> raw;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::vector<long> messages_per_block;  // empty: messages not tracked
};

// Default probe: one family per row-family tag of the system.
ResidualProbe default_probe(const LinearSystem& s);

// Scaled-form multi-block ADMM with a fresh permutation of the blocks every
// round and Gauss-Seidel reads.
AdmmResult admm_solve(const LinearSystem& s, const AdmmConfig& cfg, const ResidualProbe& probe);

inline constexpr double kNegligibleViolation = 1e-9;

// Divides each raw residual by the largest value seen so far for that family
// (0 when the family has never been violated), capped at 1. Residuals up to
// kNegligibleViolation count as zero. Stateful across iterations.
class ViolationNormalizer {
 public:
  explicit ViolationNormalizer(std::size_t families) : peak_(families, 0.0) {}
  std::vector<double> operator()(const std::vector<double>& raw);

 private:
  std::vector<double> peak_;
};

// Relaxed-model families evaluated at a relaxed-model point: max |residual|
// per family (positive part for inequality rows).
std::vector<int> violation_families(const RelaxedModel& m);
std::vector<double> raw_violations(const RelaxedModel& m, const Eigen::VectorXd& base_point);

// Normalized violations of a sequence of points: the first point plays the
// role of iteration 0.
std::vector<std::vector<double>> normalized_violations(const RelaxedModel& m,
                                                       const std::vector<Eigen::VectorXd>& base_points);

ResidualProbe overload_probe(const ReformulatedSystem& r);

AdmmResult run(const ScalingProblem& p, const AdmmConfig& cfg);

struct GapReport {
  double lp_optimum = 0.0;
  std::vector<double> objective;  // per iteration
  std::vector<double> gap;        // relative, per iteration
  double final_gap = 0.0;
  AdmmTrace trace;
};

double relative_gap(double value, double optimum);

GapReport compare_solvers(const ScalingProblem& p, const AdmmConfig& cfg);

// CSV with iteration, objective, one column per family and messages.
std::string trace_csv(const AdmmTrace& t);
// One line per iteration: iteration followed by the block order.
std::string permutation_log(const AdmmTrace& t);

}  // namespace chainscale
