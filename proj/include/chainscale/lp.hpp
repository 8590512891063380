#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace chainscale {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { Eq, Le, Ge };

struct LpVar {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
};

using SparseTerms = std::vector<std::pair<int, double>>;

struct LpRow {
  std::string name;
  SparseTerms coeffs;
  Relation relation = Relation::Eq;
  double rhs = 0.0;
  int family = 0;  // caller-defined grouping tag
};

// Minimize c'x + constant subject to linear rows and per-variable boxes.
class LpModel {
 public:
  int add_var(std::string name, double lower = 0.0, double upper = kInf, double cost = 0.0);
  int add_row(std::string name, SparseTerms coeffs, Relation relation, double rhs, int family = 0);

  void set_cost(int var, double cost);
  void set_bounds(int var, double lower, double upper);
  void set_objective_constant(double c) { constant_ = c; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const LpVar& var(int j) const { return vars_[static_cast<std::size_t>(j)]; }
  const LpRow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<LpVar>& vars() const { return vars_; }
  const std::vector<LpRow>& rows() const { return rows_; }
  const Eigen::VectorXd& costs() const { return costs_; }
  double objective_constant() const { return constant_; }

  double objective(const Eigen::VectorXd& x) const;
  double activity(int row, const Eigen::VectorXd& x) const;

  // Row-major constraint matrix, rows x vars.
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix() const;

  // Throws std::invalid_argument when a row references a missing variable or
  // a box is empty.
  void validate() const;

 private:
  std::vector<LpVar> vars_;
  std::vector<LpRow> rows_;
  Eigen::VectorXd costs_;
  double constant_ = 0.0;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd point;
  double objective_value = kInf;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

// Raised when the simplex loses numerical control or exceeds its cycle guard.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultLpTolerance = 1e-8;

class TimeLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

// Bounded two-phase revised simplex. Dantzig pricing with a switch to Bland's
// rule after a run of degenerate pivots, so a fixed model always yields the
// same answer.
LpSolution solve(const LpModel& model, double tol = kDefaultLpTolerance, Deadline deadline = std::nullopt);

struct RowViolation {
  int row = 0;
  double amount = 0.0;  // activity - rhs for the violated side
};

struct BoundViolation {
  int var = 0;
  double amount = 0.0;  // negative below the lower bound, positive above the upper
};

struct FeasibilityReport {
  std::vector<RowViolation> rows;
  std::vector<BoundViolation> bounds;

  bool feasible() const { return rows.empty() && bounds.empty(); }
  double max_abs() const;
};

FeasibilityReport check_feasibility(const LpModel& model, const Eigen::VectorXd& point,
                                    double tol = kDefaultLpTolerance);

// CPLEX LP-format text for cross-checking with external solvers.
std::string to_lp_format(const LpModel& model, const std::string& title = "model");

}  // namespace chainscale
