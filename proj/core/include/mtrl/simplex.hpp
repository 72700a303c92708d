#pragma once

#include <vector>

#include "mtrl/linalg.hpp"

namespace mtrl::lp {

using linalg::Matrix;
using linalg::Vector;

enum class Sense { kLessEqual, kEqual, kGreaterEqual };
enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(Status status);

/// Dense tableau simplex for  max c^T z  subject to row constraints and z >= 0.
///
/// The first solve() runs a two-phase primal simplex. Rows added afterwards
/// with add_row() are appended to the optimal tableau and the next solve()
/// restores feasibility with dual simplex pivots, so cutting-plane loops do
/// not restart from scratch. Entering columns use the largest reduced cost
/// and fall back to Bland's rule after a run of degenerate pivots.
class DenseSimplex {
 public:
  explicit DenseSimplex(int n_vars);

  void set_objective(const Vector& c);
  void add_row(const Vector& a, Sense sense, double b);

  Status solve();

  int n_vars() const { return n_vars_; }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  /// Values of the structural variables at the last solve.
  Vector primal() const;
  double objective() const { return objective_; }
  int iterations() const { return iterations_; }

  static constexpr double kPivotTol = 1e-9;
  static constexpr double kFeasTol = 1e-9;
  int max_iterations = 200000;

 private:
  struct Row {
    Vector a;
    Sense sense;
    double b;
  };

  Status solve_cold();
  Status solve_warm();
  void append_row_to_tableau(const Row& row);
  Status primal_pivots();
  Status dual_pivots();
  void pivot(int r, int j);
  void price(const Vector& cost);

  int n_vars_;
  Vector c_;
  std::vector<Row> rows_;
  std::size_t rows_in_tableau_ = 0;
  bool warm_ = false;

  // Tableau state: tab_ is m x n_cols, rhs_ has m entries, basis_[i] is the
  // column basic in row i, reduced_ holds c_j - c_B^T B^-1 A_j.
  using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tableau tab_;
  Vector rhs_;
  std::vector<int> basis_;
  std::vector<int> nonzeros_;
  Vector reduced_;
  Vector col_cost_;
  int n_cols_ = 0;
  double objective_ = 0.0;
  int iterations_ = 0;
};

}  // namespace mtrl::lp
