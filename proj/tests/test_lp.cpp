#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "measure_mdp/lp.hpp"
#include "measure_mdp/rng.hpp"

using namespace mmdp;
using namespace mmdp::lp;

TEST_CASE("solve_standard handles a textbook problem") {
  // min -x - 2y  s.t.  x + y + s1 = 4,  y + s2 = 3,  all >= 0.
  Matrix A(2, 4);
  A << 1, 1, 1, 0,
       0, 1, 0, 1;
  Vector b(2);
  b << 4, 3;
  Vector c(4);
  c << -1, -2, 0, 0;
  const auto sol = solve_standard(A, b, c);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(-7.0).epsilon(1e-12));
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(3.0));
}

TEST_CASE("solve_standard detects infeasibility") {
  // x1 + x2 = -1 with x >= 0 after row flip becomes -x1 - x2 = 1: infeasible.
  Matrix A(1, 2);
  A << 1, 1;
  Vector b(1);
  b << -1;
  Vector c = Vector::Ones(2);
  CHECK(solve_standard(A, b, c).status == Status::Infeasible);
}

TEST_CASE("solve_standard detects unboundedness") {
  // min -x1 s.t. x1 - x2 = 0: ray x1 = x2 -> infinity.
  Matrix A(1, 2);
  A << 1, -1;
  Vector b = Vector::Zero(1);
  Vector c(2);
  c << -1, 0;
  CHECK(solve_standard(A, b, c).status == Status::Unbounded);
}

TEST_CASE("solve_standard survives a redundant equality row") {
  Matrix A(2, 2);
  A << 1, 1,
       2, 2;
  Vector b(2);
  b << 1, 2;
  Vector c(2);
  c << 1, 3;
  const auto sol = solve_standard(A, b, c);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
}

TEST_CASE("LP optimum matches brute-force vertex enumeration on random instances") {
  // min c.x s.t. A x = b, x >= 0 with m=2, n=5: check all basis pairs.
  SplitMix64Rng rng(20260809);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix A(2, 5);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 5; ++j) A(i, j) = 2.0 * rng.next_double() - 1.0;
    Vector x_feasible(5);
    for (int j = 0; j < 5; ++j) x_feasible[j] = rng.next_double();
    const Vector b = A * x_feasible;  // guarantees feasibility
    Vector c(5);
    for (int j = 0; j < 5; ++j) c[j] = 2.0 * rng.next_double() - 1.0;

    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < 5; ++p) {
      for (int q = p + 1; q < 5; ++q) {
        Matrix B(2, 2);
        B.col(0) = A.col(p);
        B.col(1) = A.col(q);
        if (std::abs(B.determinant()) < 1e-9) continue;
        const Vector xb = B.partialPivLu().solve(b);
        if (xb.minCoeff() < -1e-9) continue;
        best = std::min(best, c[p] * xb[0] + c[q] * xb[1]);
      }
    }

    const auto sol = solve_standard(A, b, c);
    if (sol.status == Status::Unbounded) continue;  // vertex scan has no certificate
    REQUIRE(sol.status == Status::Optimal);
    if (std::isfinite(best)) {
      CHECK(sol.objective == doctest::Approx(best).epsilon(1e-7));
      ++solved;
    }
  }
  CHECK(solved > 100);  // the comparison actually exercised most draws
}

TEST_CASE("transport_cost matches hand values") {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  CHECK(transport_cost(cost, a, b) == doctest::Approx(1.0).epsilon(1e-12));
  a << 0.5, 0.5;
  b << 0.5, 0.5;
  CHECK(transport_cost(cost, a, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("max_min_slack recovers the Chebyshev-style center") {
  // Slack of x in [0, 1] against rows x >= 0 and -x >= -1: best min slack 0.5.
  Matrix soft(2, 1);
  soft << 1, -1;
  Vector soft_b(2);
  soft_b << 0, -1;
  Matrix hard(2, 1);
  hard << 1, -1;
  Vector hard_b(2);
  hard_b << -10, -10;
  const auto res = max_min_slack(soft, soft_b, hard, hard_b);
  REQUIRE(res.status == Status::Optimal);
  CHECK(res.t == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.z[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("max_min_slack reports negative optima for inconsistent soft rows") {
  // x >= 1 and -x >= -(-1) i.e. x <= -1: midpoint slack is -1 at x = 0.
  Matrix soft(2, 1);
  soft << 1, -1;
  Vector soft_b(2);
  soft_b << 1, 1;
  Matrix hard(2, 1);
  hard << 1, -1;
  Vector hard_b(2);
  hard_b << -100, -100;
  const auto res = max_min_slack(soft, soft_b, hard, hard_b);
  REQUIRE(res.status == Status::Optimal);
  CHECK(res.t == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("max_min_slack honors hard rows without slack credit") {
  // Soft: z >= 0. Hard: z >= 2. Optimal z sits at... any z >= 2, slack z >= 2.
  // A box z <= 5 keeps it bounded; max slack = 5.
  Matrix soft(1, 1);
  soft << 1;
  Vector soft_b(1);
  soft_b << 0;
  Matrix hard(2, 1);
  hard << 1, -1;
  Vector hard_b(2);
  hard_b << 2, -5;
  const auto res = max_min_slack(soft, soft_b, hard, hard_b);
  REQUIRE(res.status == Status::Optimal);
  CHECK(res.t == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(res.z[0] == doctest::Approx(5.0).epsilon(1e-9));
}
