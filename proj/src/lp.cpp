#include "chainscale/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace chainscale {

int LpModel::add_var(std::string name, double lower, double upper, double cost) {
  vars_.push_back({std::move(name), lower, upper});
  costs_.conservativeResize(static_cast<Eigen::Index>(vars_.size()));
  costs_[costs_.size() - 1] = cost;
  return num_vars() - 1;
}

int LpModel::add_row(std::string name, SparseTerms coeffs, Relation relation, double rhs, int family) {
  rows_.push_back({std::move(name), std::move(coeffs), relation, rhs, family});
  return num_rows() - 1;
}

void LpModel::set_cost(int var, double cost) { costs_[var] = cost; }

void LpModel::set_bounds(int var, double lower, double upper) {
  vars_[static_cast<std::size_t>(var)].lower = lower;
  vars_[static_cast<std::size_t>(var)].upper = upper;
}

double LpModel::objective(const Eigen::VectorXd& x) const { return costs_.dot(x) + constant_; }

double LpModel::activity(int r, const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const auto& [j, a] : row(r).coeffs) s += a * x[j];
  return s;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> LpModel::matrix() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < num_rows(); ++i) {
    for (const auto& [j, a] : row(i).coeffs) trips.emplace_back(i, j, a);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(num_rows(), num_vars());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void LpModel::validate() const {
  for (const LpVar& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw std::invalid_argument("variable " + v.name + " has an empty box");
    }
  }
  for (const LpRow& r : rows_) {
    for (const auto& [j, a] : r.coeffs) {
      if (j < 0 || j >= num_vars()) throw std::invalid_argument("row " + r.name + " references a missing variable");
      if (!std::isfinite(a)) throw std::invalid_argument("row " + r.name + " has a non-finite coefficient");
    }
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("row " + r.name + " has a non-finite right-hand side");
  }
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr int kRefactorEvery = 128;
constexpr int kDegenerateRunForBland = 40;

// Working form: A x = b over structural, slack and artificial columns, each
// column boxed by [lo, hi].
class RevisedSimplex {
 public:
  RevisedSimplex(const LpModel& model, double tol, Deadline deadline)
      : model_(model), tol_(tol), deadline_(deadline) {
    m_ = model.num_rows();
    n_ = model.num_vars();
    int slacks = 0;
    for (const LpRow& r : model.rows()) slacks += r.relation != Relation::Eq;
    first_art_ = n_ + slacks;
    total_ = first_art_ + m_;

    lo_.resize(total_);
    hi_.resize(total_);
    cost_ = Eigen::VectorXd::Zero(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = model.var(j).lower;
      hi_[j] = model.var(j).upper;
      cost_[j] = model.costs()[j];
    }
    b_.resize(m_);
    std::vector<Eigen::Triplet<double>> trips;
    int s = n_;
    for (int i = 0; i < m_; ++i) {
      const LpRow& r = model.row(i);
      for (const auto& [j, a] : r.coeffs) {
        if (a != 0.0) trips.emplace_back(i, j, a);
      }
      if (r.relation != Relation::Eq) {
        trips.emplace_back(i, s, r.relation == Relation::Le ? 1.0 : -1.0);
        lo_[s] = 0.0;
        hi_[s] = kInf;
        ++s;
      }
      b_[i] = r.rhs;
    }

    x_ = Eigen::VectorXd::Zero(total_);
    for (int j = 0; j < first_art_; ++j) x_[j] = resting_value(j);

    // Residual left for the artificials after placing every real column at rest.
    Eigen::SparseMatrix<double> a_real(m_, first_art_);
    a_real.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd resid = b_ - a_real * x_.head(first_art_);
    for (int i = 0; i < m_; ++i) {
      const double sign = resid[i] >= 0 ? 1.0 : -1.0;
      trips.emplace_back(i, first_art_ + i, sign);
      lo_[first_art_ + i] = 0.0;
      hi_[first_art_ + i] = kInf;
    }
    a_.resize(m_, total_);
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();

    basis_.resize(m_);
    pos_.assign(static_cast<std::size_t>(total_), -1);
    for (int i = 0; i < m_; ++i) {
      basis_[static_cast<std::size_t>(i)] = first_art_ + i;
      pos_[static_cast<std::size_t>(first_art_ + i)] = i;
    }
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      binv_(i, i) = resid[i] >= 0 ? 1.0 : -1.0;
      x_[first_art_ + i] = std::abs(resid[i]);
    }
    max_iters_ = 50 * (m_ + total_) + 1000;
  }

  LpSolution run() {
    LpSolution out;
    if (m_ > 0) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total_);
      phase1.tail(m_).setOnes();
      optimize(phase1, /*phase_one=*/true);
      double infeas = x_.tail(m_).sum();
      const double scale = std::max(1.0, b_.cwiseAbs().maxCoeff());
      if (infeas > tol_ * scale * 10) {
        out.status = LpStatus::Infeasible;
        out.iterations = iterations_;
        return out;
      }
      for (int i = 0; i < m_; ++i) hi_[first_art_ + i] = 0.0;
      drive_out_artificials();
    }
    if (!optimize(cost_, /*phase_one=*/false)) {
      out.status = LpStatus::Unbounded;
      out.iterations = iterations_;
      return out;
    }
    refactor();
    out.status = LpStatus::Optimal;
    out.point = x_.head(n_);
    // Basic values can drift by rounding past a bound they are sitting on.
    for (int j = 0; j < n_; ++j) out.point[j] = std::clamp(out.point[j], lo_[j], hi_[j]);
    out.objective_value = model_.objective(out.point);
    out.iterations = iterations_;
    return out;
  }

 private:
  double resting_value(int j) const {
    if (std::isfinite(lo_[j])) return lo_[j];
    if (std::isfinite(hi_[j])) return hi_[j];
    return 0.0;
  }

  bool is_art(int j) const { return j >= first_art_; }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, basis_[static_cast<std::size_t>(i)]); it; ++it) {
        basis_matrix(it.row(), i) = it.value();
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    if (lu.rcond() < 1e-14) throw NumericalError("simplex basis became singular");
    binv_ = lu.inverse();
    Eigen::VectorXd rhs = b_;
    for (int j = 0; j < total_; ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0 || x_[j] == 0.0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
    }
    Eigen::VectorXd xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[basis_[static_cast<std::size_t>(i)]] = xb[i];
    since_refactor_ = 0;
  }

  Eigen::VectorXd column(int j) const {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(m_);
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) col.noalias() += it.value() * binv_.col(it.row());
    return col;
  }

  void pivot(int row, int entering, const Eigen::VectorXd& col) {
    const int leaving = basis_[static_cast<std::size_t>(row)];
    pos_[static_cast<std::size_t>(leaving)] = -1;
    basis_[static_cast<std::size_t>(row)] = entering;
    pos_[static_cast<std::size_t>(entering)] = row;
    const double p = col[row];
    binv_.row(row) /= p;
    Eigen::RowVectorXd prow = binv_.row(row);
    for (int i = 0; i < m_; ++i) {
      if (i != row && col[i] != 0.0) binv_.row(i).noalias() -= col[i] * prow;
    }
    if (++since_refactor_ >= kRefactorEvery) refactor();
  }

  // Returns false when the objective is unbounded below.
  bool optimize(const Eigen::VectorXd& cost, bool phase_one) {
    int degenerate_run = 0;
    bool bland = false;
    for (;;) {
      if (++iterations_ > max_iters_) throw NumericalError("simplex exceeded its iteration guard");
      if (deadline_ && iterations_ % 64 == 0 && std::chrono::steady_clock::now() > *deadline_) {
        throw TimeLimitExceeded("simplex ran past its deadline");
      }
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[static_cast<std::size_t>(i)]];
      const Eigen::VectorXd y = binv_.transpose() * cb;

      int entering = -1;
      double best = 0.0;
      double entering_d = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
        if (is_art(j)) continue;
        if (lo_[j] == hi_[j]) continue;
        double d = cost[j];
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) d -= it.value() * y[it.row()];
        const bool can_up = x_[j] < hi_[j] && d < -kDualTol;
        const bool can_down = x_[j] > lo_[j] && d > kDualTol;
        if (!can_up && !can_down) continue;
        if (bland) {
          entering = j;
          entering_d = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          entering_d = d;
        }
      }
      if (entering < 0) return true;

      const Eigen::VectorXd col = column(entering);
      const double dir = entering_d < 0 ? 1.0 : -1.0;
      double step = hi_[entering] - lo_[entering];  // bound flip
      int leave_row = -1;
      double leave_mag = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double rate = -dir * col[i];
        if (std::abs(col[i]) <= kPivotTol) continue;
        const int bv = basis_[static_cast<std::size_t>(i)];
        double limit;
        if (rate < 0) {
          if (!std::isfinite(lo_[bv])) continue;
          limit = (x_[bv] - lo_[bv]) / -rate;
        } else {
          if (!std::isfinite(hi_[bv])) continue;
          limit = (hi_[bv] - x_[bv]) / rate;
        }
        limit = std::max(limit, 0.0);
        const double mag = std::abs(col[i]);
        bool take = false;
        if (leave_row < 0 ? limit < step : limit < step - 1e-12) {
          take = true;
        } else if (leave_row >= 0 && limit <= step + 1e-12) {
          // Tie: Bland prefers the lowest basic index, otherwise the largest pivot.
          take = bland ? bv < basis_[static_cast<std::size_t>(leave_row)] : mag > leave_mag;
        }
        if (take) {
          step = std::min(step, limit);
          leave_row = i;
          leave_mag = mag;
        }
      }
      if (!std::isfinite(step)) {
        if (phase_one) throw NumericalError("phase one reported an unbounded direction");
        return false;
      }

      if (step <= 1e-12) {
        if (++degenerate_run >= kDegenerateRunForBland) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      for (int i = 0; i < m_; ++i) {
        if (col[i] != 0.0) x_[basis_[static_cast<std::size_t>(i)]] -= step * dir * col[i];
      }
      if (leave_row < 0) {
        x_[entering] = dir > 0 ? hi_[entering] : lo_[entering];
        continue;
      }
      const int leaving = basis_[static_cast<std::size_t>(leave_row)];
      const double rate = -dir * col[leave_row];
      x_[leaving] = rate < 0 ? lo_[leaving] : hi_[leaving];
      x_[entering] += dir * step;
      pivot(leave_row, entering, col);
    }
  }

  // After phase one, swap zero-valued artificials for real columns where the
  // row allows it. Rows that cannot be swapped are redundant; their artificial
  // stays basic, pinned to [0, 0].
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (!is_art(basis_[static_cast<std::size_t>(r)])) continue;
      Eigen::RowVectorXd brow = binv_.row(r);
      int best_j = -1;
      double best = 1e-7;
      for (int j = 0; j < first_art_; ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
        double v = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) v += brow[it.row()] * it.value();
        if (std::abs(v) > best) {
          best = std::abs(v);
          best_j = j;
        }
      }
      if (best_j < 0) continue;
      const Eigen::VectorXd col = column(best_j);
      const int leaving = basis_[static_cast<std::size_t>(r)];
      // Move the (near-zero) artificial to exactly zero; the entering column keeps its value.
      const double delta = x_[leaving] / col[r];
      for (int i = 0; i < m_; ++i) x_[basis_[static_cast<std::size_t>(i)]] -= delta * col[i];
      x_[best_j] += delta;
      x_[leaving] = 0.0;
      pivot(r, best_j, col);
    }
  }

  const LpModel& model_;
  double tol_;
  int m_ = 0, n_ = 0, first_art_ = 0, total_ = 0;
  Eigen::SparseMatrix<double> a_;
  Eigen::VectorXd b_, lo_, hi_, cost_, x_;
  std::vector<int> basis_;
  std::vector<int> pos_;
  Eigen::MatrixXd binv_;
  int since_refactor_ = 0;
  int iterations_ = 0;
  int max_iters_ = 0;
  Deadline deadline_;
};

}  // namespace

LpSolution solve(const LpModel& model, double tol, Deadline deadline) {
  model.validate();
  RevisedSimplex simplex(model, tol, deadline);
  LpSolution sol = simplex.run();
  if (sol.optimal()) {
    const FeasibilityReport rep = check_feasibility(model, sol.point, std::max(tol, 1e-9) * 100);
    if (!rep.feasible()) {
      throw NumericalError("simplex result violates the model by " + std::to_string(rep.max_abs()));
    }
  }
  return sol;
}

double FeasibilityReport::max_abs() const {
  double m = 0.0;
  for (const auto& v : rows) m = std::max(m, std::abs(v.amount));
  for (const auto& v : bounds) m = std::max(m, std::abs(v.amount));
  return m;
}

FeasibilityReport check_feasibility(const LpModel& model, const Eigen::VectorXd& point, double tol) {
  if (point.size() != model.num_vars()) {
    throw std::invalid_argument("point has " + std::to_string(point.size()) + " entries, model has " +
                                std::to_string(model.num_vars()) + " variables");
  }
  FeasibilityReport rep;
  for (int i = 0; i < model.num_rows(); ++i) {
    const LpRow& r = model.row(i);
    const double diff = model.activity(i, point) - r.rhs;
    const bool bad = (r.relation == Relation::Eq && std::abs(diff) > tol) ||
                     (r.relation == Relation::Le && diff > tol) || (r.relation == Relation::Ge && diff < -tol);
    if (bad) rep.rows.push_back({i, diff});
  }
  for (int j = 0; j < model.num_vars(); ++j) {
    const LpVar& v = model.var(j);
    if (point[j] < v.lower - tol) rep.bounds.push_back({j, point[j] - v.lower});
    if (point[j] > v.upper + tol) rep.bounds.push_back({j, point[j] - v.upper});
  }
  return rep;
}

namespace {

std::string lp_name(const std::string& raw, char prefix, int index) {
  std::string s;
  for (char c : raw) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    s += ok ? c : '_';
  }
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.') {
    s = std::string(1, prefix) + std::to_string(index) + "_" + s;
  }
  return s;
}

void write_terms(std::ostream& os, const SparseTerms& terms, const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [j, a] : terms) {
    if (a == 0.0) continue;
    os << (a < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    if (std::abs(a) != 1.0) os << std::abs(a) << ' ';
    os << names[static_cast<std::size_t>(j)];
    first = false;
  }
  if (first) os << "0 " << (names.empty() ? "x" : names.front());
}

}  // namespace

std::string to_lp_format(const LpModel& model, const std::string& title) {
  std::vector<std::string> names;
  for (int j = 0; j < model.num_vars(); ++j) names.push_back(lp_name(model.var(j).name, 'x', j));
  std::ostringstream os;
  os.precision(17);
  os << "\\ " << title << "\n";
  if (model.objective_constant() != 0.0) os << "\\ objective constant " << model.objective_constant() << "\n";
  os << "Minimize\n obj: ";
  SparseTerms obj;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.costs()[j] != 0.0) obj.emplace_back(j, model.costs()[j]);
  }
  write_terms(os, obj, names);
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_rows(); ++i) {
    const LpRow& r = model.row(i);
    os << ' ' << lp_name(r.name, 'c', i) << ": ";
    write_terms(os, r.coeffs, names);
    os << (r.relation == Relation::Eq ? " = " : r.relation == Relation::Le ? " <= " : " >= ") << r.rhs << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_vars(); ++j) {
    const LpVar& v = model.var(j);
    const auto& nm = names[static_cast<std::size_t>(j)];
    if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
      os << ' ' << nm << " free\n";
    } else if (v.lower == v.upper) {
      os << ' ' << nm << " = " << v.lower << "\n";
    } else {
      os << ' ';
      if (std::isfinite(v.lower)) {
        os << v.lower;
      } else {
        os << "-inf";
      }
      os << " <= " << nm;
      if (std::isfinite(v.upper)) os << " <= " << v.upper;
      os << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace chainscale
