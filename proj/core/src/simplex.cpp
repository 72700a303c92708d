#include "mtrl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtrl/errors.hpp"

namespace mtrl::lp {

namespace {

using linalg::Index;

// Consecutive degenerate pivots tolerated before switching to Bland's rule.
constexpr int kDegenerateStreak = 50;

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

DenseSimplex::DenseSimplex(int n_vars) : n_vars_(n_vars), c_(Vector::Zero(n_vars)) {
  if (n_vars < 1) throw DimensionError("DenseSimplex: need at least one variable");
}

void DenseSimplex::set_objective(const Vector& c) {
  if (c.size() != n_vars_) throw DimensionError("DenseSimplex: objective size");
  c_ = c;
  if (warm_) col_cost_.head(n_vars_) = c_;
}

void DenseSimplex::add_row(const Vector& a, Sense sense, double b) {
  if (a.size() != n_vars_) throw DimensionError("DenseSimplex: row size");
  if (!a.allFinite() || !std::isfinite(b)) {
    throw DimensionError("DenseSimplex: non-finite row");
  }
  if (warm_ && sense == Sense::kEqual) {
    rows_.push_back({a, Sense::kLessEqual, b});
    rows_.push_back({a, Sense::kGreaterEqual, b});
    return;
  }
  rows_.push_back({a, sense, b});
}

Status DenseSimplex::solve() { return warm_ ? solve_warm() : solve_cold(); }

Vector DenseSimplex::primal() const {
  Vector x = Vector::Zero(n_vars_);
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    if (basis_[i] < n_vars_) x(basis_[i]) = std::max(0.0, rhs_(static_cast<Index>(i)));
  }
  return x;
}

void DenseSimplex::price(const Vector& cost) {
  reduced_ = cost;
  objective_ = 0.0;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const double cb = cost(basis_[i]);
    if (cb == 0.0) continue;
    reduced_ -= cb * tab_.row(static_cast<Index>(i)).transpose();
    objective_ += cb * rhs_(static_cast<Index>(i));
  }
  for (int j : basis_) reduced_(j) = 0.0;
}

void DenseSimplex::pivot(int r, int j) {
  const double p = tab_(r, j);
  tab_.row(r) /= p;
  rhs_(r) /= p;
  tab_(r, j) = 1.0;
  // Only the pivot row's nonzeros change other rows.
  nonzeros_.clear();
  for (Index k = 0; k < tab_.cols(); ++k) {
    if (tab_(r, k) != 0.0) nonzeros_.push_back(static_cast<int>(k));
  }
  const bool sparse = nonzeros_.size() * 4 < static_cast<std::size_t>(tab_.cols());
  for (Index i = 0; i < tab_.rows(); ++i) {
    if (i == r) continue;
    const double f = tab_(i, j);
    if (f == 0.0) continue;
    if (sparse) {
      for (int k : nonzeros_) tab_(i, k) -= f * tab_(r, k);
    } else {
      tab_.row(i) -= f * tab_.row(r);
    }
    rhs_(i) -= f * rhs_(r);
    tab_(i, j) = 0.0;
  }
  const double f = reduced_(j);
  if (f != 0.0) {
    reduced_ -= f * tab_.row(r).transpose();
    objective_ += f * rhs_(r);
  }
  reduced_(j) = 0.0;
  basis_[r] = j;
  ++iterations_;
}

Status DenseSimplex::primal_pivots() {
  std::vector<char> basic(n_cols_, 0);
  for (int j : basis_) basic[j] = 1;
  int degenerate = 0;
  while (true) {
    if (iterations_ >= max_iterations) return Status::kIterationLimit;
    const bool bland = degenerate >= kDegenerateStreak;
    int enter = -1;
    double best = kFeasTol;
    for (int j = 0; j < n_cols_; ++j) {
      if (basic[j] || reduced_(j) <= kFeasTol) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (reduced_(j) > best) {
        best = reduced_(j);
        enter = j;
      }
    }
    if (enter < 0) return Status::kOptimal;

    int leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < tab_.rows(); ++i) {
      const double a = tab_(i, enter);
      if (a <= kPivotTol) continue;
      const double q = std::max(0.0, rhs_(i)) / a;
      if (q < ratio - 1e-12 ||
          (q <= ratio + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
        ratio = std::min(ratio, q);
        leave = static_cast<int>(i);
      }
    }
    if (leave < 0) return Status::kUnbounded;
    degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
    basic[basis_[leave]] = 0;
    basic[enter] = 1;
    pivot(leave, enter);
  }
}

Status DenseSimplex::dual_pivots() {
  std::vector<char> basic(n_cols_, 0);
  for (int j : basis_) basic[j] = 1;
  while (true) {
    if (iterations_ >= max_iterations) return Status::kIterationLimit;
    int leave = -1;
    double worst = -kFeasTol;
    for (Index i = 0; i < rhs_.size(); ++i) {
      if (rhs_(i) < worst) {
        worst = rhs_(i);
        leave = static_cast<int>(i);
      }
    }
    if (leave < 0) return Status::kOptimal;
    int enter = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_cols_; ++j) {
      const double a = tab_(leave, j);
      if (basic[j] || a >= -kPivotTol) continue;
      const double q = std::min(0.0, reduced_(j)) / a;
      if (q < ratio - 1e-12) {
        ratio = q;
        enter = j;
      }
    }
    if (enter < 0) return Status::kInfeasible;
    basic[basis_[leave]] = 0;
    basic[enter] = 1;
    pivot(leave, enter);
  }
}

Status DenseSimplex::solve_cold() {
  const int m = static_cast<int>(rows_.size());
  if (m == 0) throw DimensionError("DenseSimplex: no constraints");
  iterations_ = 0;

  // Normalize to b >= 0, then count slack and artificial columns.
  std::vector<Row> rows = rows_;
  int n_slack = 0;
  int n_art = 0;
  for (Row& row : rows) {
    if (row.b < 0.0) {
      row.a = -row.a;
      row.b = -row.b;
      if (row.sense == Sense::kLessEqual) {
        row.sense = Sense::kGreaterEqual;
      } else if (row.sense == Sense::kGreaterEqual) {
        row.sense = Sense::kLessEqual;
      }
    }
    if (row.sense != Sense::kEqual) ++n_slack;
    if (row.sense != Sense::kLessEqual) ++n_art;
  }
  const int first_art = n_vars_ + n_slack;
  n_cols_ = first_art + n_art;
  tab_ = Tableau::Zero(m, n_cols_);
  rhs_ = Vector(m);
  basis_.assign(m, -1);
  int slack = n_vars_;
  int art = first_art;
  for (int i = 0; i < m; ++i) {
    const Row& row = rows[i];
    tab_.row(i).head(n_vars_) = row.a.transpose();
    rhs_(i) = row.b;
    if (row.sense == Sense::kLessEqual) {
      tab_(i, slack) = 1.0;
      basis_[i] = slack++;
    } else {
      if (row.sense == Sense::kGreaterEqual) tab_(i, slack++) = -1.0;
      tab_(i, art) = 1.0;
      basis_[i] = art++;
    }
  }

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(n_cols_);
    phase1.tail(n_art).setConstant(-1.0);
    price(phase1);
    const Status s1 = primal_pivots();
    if (s1 == Status::kIterationLimit) return s1;
    const double scale = 1.0 + rhs_.cwiseAbs().maxCoeff();
    if (objective_ < -1e-7 * scale) return Status::kInfeasible;
    // Drive remaining artificials out of the basis; drop redundant rows.
    for (int i = 0; i < static_cast<int>(basis_.size());) {
      if (basis_[i] < first_art) {
        ++i;
        continue;
      }
      int enter = -1;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(tab_(i, j)) > kPivotTol &&
            std::find(basis_.begin(), basis_.end(), j) == basis_.end()) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        pivot(i, enter);
        ++i;
        continue;
      }
      const Index last = tab_.rows() - 1;
      tab_.row(i) = tab_.row(last);
      rhs_(i) = rhs_(last);
      basis_[i] = basis_[last];
      tab_.conservativeResize(last, Eigen::NoChange);
      rhs_.conservativeResize(last);
      basis_.pop_back();
    }
    tab_.conservativeResize(Eigen::NoChange, first_art);
    n_cols_ = first_art;
  }

  col_cost_ = Vector::Zero(n_cols_);
  col_cost_.head(n_vars_) = c_;
  price(col_cost_);
  const Status s2 = primal_pivots();
  rows_in_tableau_ = rows_.size();
  warm_ = s2 == Status::kOptimal;
  return s2;
}

void DenseSimplex::append_row_to_tableau(const Row& input) {
  Row row = input;
  if (row.sense == Sense::kGreaterEqual) {
    row.a = -row.a;
    row.b = -row.b;
  }
  const int col = n_cols_++;
  tab_.conservativeResize(Eigen::NoChange, n_cols_);
  tab_.col(col).setZero();
  reduced_.conservativeResize(n_cols_);
  reduced_(col) = 0.0;
  col_cost_.conservativeResize(n_cols_);
  col_cost_(col) = 0.0;

  Eigen::RowVectorXd full = Eigen::RowVectorXd::Zero(n_cols_);
  full.head(n_vars_) = row.a.transpose();
  full(col) = 1.0;
  double b = row.b;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const double f = full(basis_[i]);
    if (f == 0.0) continue;
    full -= f * tab_.row(static_cast<Index>(i));
    b -= f * rhs_(static_cast<Index>(i));
    full(basis_[i]) = 0.0;
  }
  const Index r = tab_.rows();
  tab_.conservativeResize(r + 1, Eigen::NoChange);
  tab_.row(r) = full;
  rhs_.conservativeResize(r + 1);
  rhs_(r) = b;
  basis_.push_back(col);
}

Status DenseSimplex::solve_warm() {
  for (; rows_in_tableau_ < rows_.size(); ++rows_in_tableau_) {
    append_row_to_tableau(rows_[rows_in_tableau_]);
  }
  iterations_ = 0;
  price(col_cost_);
  Status s = Status::kOptimal;
  if (reduced_.maxCoeff() <= kFeasTol) {
    s = dual_pivots();
    if (s != Status::kOptimal) {
      warm_ = s != Status::kInfeasible;
      return s;
    }
  } else if (rhs_.size() > 0 && rhs_.minCoeff() < -kFeasTol) {
    // Neither primal nor dual feasible (objective changed and rows added);
    // rebuild from scratch.
    warm_ = false;
    return solve_cold();
  }
  return primal_pivots();
}

}  // namespace mtrl::lp
