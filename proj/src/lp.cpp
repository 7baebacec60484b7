#include "measure_mdp/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

namespace mmdp::lp {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;

struct SimplexState {
  const Matrix& A;
  const Vector& b;
  std::vector<int> basis;          // m basic column indices
  Eigen::PartialPivLU<Matrix> lu;  // factorization of the basis matrix

  void refactor() {
    const int m = static_cast<int>(A.rows());
    Matrix B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[static_cast<std::size_t>(i)]);
    lu.compute(B);
  }
};

// Core iteration on (A, b, cost) from a given feasible basis. `allowed`
// masks columns that may enter (used to lock out artificials in phase 2).
Status iterate(SimplexState& st, const Vector& cost, const std::vector<bool>& allowed,
               long max_iterations) {
  const int m = static_cast<int>(st.A.rows());
  const int n = static_cast<int>(st.A.cols());
  long degenerate_streak = 0;
  double last_objective = std::numeric_limits<double>::infinity();

  for (long iter = 0; iter < max_iterations; ++iter) {
    st.refactor();
    Vector x_basic = st.lu.solve(st.b);
    Vector c_basic(m);
    for (int i = 0; i < m; ++i) c_basic[i] = cost[st.basis[static_cast<std::size_t>(i)]];
    Vector y = st.lu.transpose().solve(c_basic);

    const double objective = c_basic.dot(x_basic);
    if (objective >= last_objective - 1e-13)
      ++degenerate_streak;
    else
      degenerate_streak = 0;
    last_objective = objective;
    const bool bland = degenerate_streak > 2L * (m + 50);

    std::vector<bool> in_basis(static_cast<std::size_t>(n), false);
    for (int i = 0; i < m; ++i) in_basis[static_cast<std::size_t>(st.basis[static_cast<std::size_t>(i)])] = true;

    int entering = -1;
    double best_reduced = -kReducedCostTol;
    for (int j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)] || !allowed[static_cast<std::size_t>(j)]) continue;
      const double reduced = cost[j] - y.dot(st.A.col(j));
      if (reduced < best_reduced) {
        entering = j;
        if (bland) break;  // first eligible index
        best_reduced = reduced;
      }
    }
    if (entering < 0) return Status::Optimal;

    Vector direction = st.lu.solve(st.A.col(entering));
    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (direction[i] <= kPivotTol) continue;
      const double ratio = std::max(x_basic[i], 0.0) / direction[i];
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 &&
           (leaving < 0 || st.basis[static_cast<std::size_t>(i)] <
                               st.basis[static_cast<std::size_t>(leaving)]))) {
        best_ratio = ratio;
        leaving = i;
      }
    }
    if (leaving < 0) return Status::Unbounded;
    st.basis[static_cast<std::size_t>(leaving)] = entering;
  }
  return Status::IterationLimit;
}

}  // namespace

Solution solve_standard(const Matrix& A_in, const Vector& b_in, const Vector& c,
                        long max_iterations) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());

  // Flip rows so b >= 0, then append artificial columns for phase 1.
  Matrix A(m, n + m);
  Vector b = b_in;
  A.leftCols(n) = A_in;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      b[i] = -b[i];
      A.row(i).head(n) = -A_in.row(i);
    }
  }
  A.rightCols(m) = Matrix::Identity(m, m);

  SimplexState st{A, b, {}, {}};
  st.basis.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) st.basis[static_cast<std::size_t>(i)] = n + i;

  Vector phase1_cost = Vector::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  std::vector<bool> all_allowed(static_cast<std::size_t>(n + m), true);

  Solution result;
  Status status = iterate(st, phase1_cost, all_allowed, max_iterations);
  if (status != Status::Optimal) {
    result.status = status;
    return result;
  }
  st.refactor();
  Vector x_basic = st.lu.solve(b);
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i)
    if (st.basis[static_cast<std::size_t>(i)] >= n) infeasibility += std::max(x_basic[i], 0.0);
  if (infeasibility > 1e-7) {
    result.status = Status::Infeasible;
    return result;
  }

  // Phase 2: artificials may stay basic at zero (redundant rows) but must
  // never re-enter or price.
  Vector phase2_cost = Vector::Zero(n + m);
  phase2_cost.head(n) = c;
  std::vector<bool> allowed(static_cast<std::size_t>(n + m), true);
  for (int j = n; j < n + m; ++j) allowed[static_cast<std::size_t>(j)] = false;

  status = iterate(st, phase2_cost, allowed, max_iterations);
  if (status != Status::Optimal) {
    result.status = status;
    return result;
  }

  st.refactor();
  x_basic = st.lu.solve(b);
  Vector c_basic(m);
  for (int i = 0; i < m; ++i) c_basic[i] = phase2_cost[st.basis[static_cast<std::size_t>(i)]];
  Vector y = st.lu.transpose().solve(c_basic);

  result.status = Status::Optimal;
  result.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int j = st.basis[static_cast<std::size_t>(i)];
    if (j < n) result.x[j] = std::max(x_basic[i], 0.0);
  }
  result.objective = c.dot(result.x);
  // Undo the row flips in the multipliers.
  result.multipliers = y;
  for (int i = 0; i < m; ++i)
    if (b_in[i] < 0.0) result.multipliers[i] = -result.multipliers[i];
  return result;
}

double transport_cost(const Matrix& cost, const Vector& supply, const Vector& demand) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  if (cost.rows() != n || cost.cols() != m)
    throw std::invalid_argument("transport_cost: cost matrix shape mismatch");

  // Variables x(i,j) flattened row-major; one demand row dropped (redundant).
  const int cols = n * m;
  const int rows = n + m - 1;
  Matrix A = Matrix::Zero(rows, cols);
  Vector b(rows);
  Vector c(cols);
  for (int i = 0; i < n; ++i) {
    b[i] = supply[i];
    for (int j = 0; j < m; ++j) {
      const int v = i * m + j;
      c[v] = cost(i, j);
      A(i, v) = 1.0;
      if (j < m - 1) A(n + j, v) = 1.0;
    }
  }
  for (int j = 0; j < m - 1; ++j) b[n + j] = demand[j];

  Solution sol = solve_standard(A, b, c);
  if (sol.status != Status::Optimal)
    throw NumericalError("transport_cost: LP did not reach optimality");
  return sol.objective;
}

MaxMinSlackResult max_min_slack(const Matrix& soft_A, const Vector& soft_b,
                                const Matrix& hard_A, const Vector& hard_b) {
  const int p = static_cast<int>(soft_A.cols());
  const int n_soft = static_cast<int>(soft_A.rows());
  const int n_hard = static_cast<int>(hard_A.rows());
  if (n_hard > 0 && hard_A.cols() != p)
    throw std::invalid_argument("max_min_slack: column mismatch");

  // Primal:  max e_t.[z;t]  s.t.  [-soft_A, 1; -hard_A, 0][z;t] <= [-soft_b; -hard_b].
  // Dual:    min (-b).y     s.t.  G^T y = e_t, y >= 0,
  // whose equality multipliers at optimality are exactly [z; t].
  const int rows = n_soft + n_hard;
  Matrix Gt = Matrix::Zero(p + 1, rows);
  Vector dual_cost(rows);
  for (int i = 0; i < n_soft; ++i) {
    Gt.col(i).head(p) = -soft_A.row(i).transpose();
    Gt(p, i) = 1.0;
    dual_cost[i] = -soft_b[i];
  }
  for (int i = 0; i < n_hard; ++i) {
    Gt.col(n_soft + i).head(p) = -hard_A.row(i).transpose();
    dual_cost[n_soft + i] = -hard_b[i];
  }
  Vector rhs = Vector::Zero(p + 1);
  rhs[p] = 1.0;

  Solution dual = solve_standard(Gt, rhs, dual_cost);
  MaxMinSlackResult result;
  if (dual.status == Status::Infeasible) {
    result.status = Status::Unbounded;  // primal unbounded above
    return result;
  }
  if (dual.status != Status::Optimal) {
    result.status = dual.status;
    return result;
  }
  result.status = Status::Optimal;
  result.z = dual.multipliers.head(p);
  result.t = dual.multipliers[p];
  return result;
}

}  // namespace mmdp::lp
