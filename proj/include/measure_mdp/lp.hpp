#pragma once

#include <Eigen/Dense>

#include "measure_mdp/mdp.hpp"

namespace mmdp::lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::IterationLimit;
  Vector x;             // primal point, length n
  double objective = 0.0;
  Vector multipliers;   // equality multipliers y at the final basis, length m
};

// Dense revised simplex for  min c.x  s.t.  A x = b, x >= 0.
// Two phases, Dantzig pricing with a Bland fallback under degeneracy.
// Intended scale: m up to a few hundred rows.
Solution solve_standard(const Matrix& A, const Vector& b, const Vector& c,
                        long max_iterations = 200000);

// Exact optimal-transport cost between two probability vectors under a
// ground-metric cost matrix: the classic transportation LP.
double transport_cost(const Matrix& cost, const Vector& supply, const Vector& demand);

struct MaxMinSlackResult {
  Status status = Status::IterationLimit;
  Vector z;         // decision variables
  double t = 0.0;   // optimal min slack over the soft rows
};

// maximize t  s.t.  soft_A z >= soft_b + t  and  hard_A z >= hard_b.
// Solved through the dual so the basis stays (dim z + 1)-sized however many
// rows there are. Every variable must be touched by at least one hard row
// (box constraints) so the dual has full row rank.
MaxMinSlackResult max_min_slack(const Matrix& soft_A, const Vector& soft_b,
                                const Matrix& hard_A, const Vector& hard_b);

}  // namespace mmdp::lp
