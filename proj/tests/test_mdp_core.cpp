#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "test_support.hpp"

using namespace mmdp;
using mmdp::testing::make_random_mdp;
using mmdp::testing::make_random_policy;
using mmdp::testing::make_two_state_chain;

namespace {

FiniteMdp two_state_one_action() {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = 0.9;
  Matrix P(2, 2);
  P << 0.5, 0.5, 0.0, 1.0;
  mdp.transition = {P};
  mdp.cost_table = Matrix::Zero(2, 1);
  return mdp;
}

}  // namespace

TEST_CASE("validate_mdp accepts a well-formed MDP") {
  CHECK(validate_mdp(two_state_one_action()).empty());
}

TEST_CASE("validate_mdp reports a bad row sum naming (s,a)") {
  FiniteMdp mdp = two_state_one_action();
  mdp.transition[0](0, 1) = 0.6;  // row (0,0) now sums to 1.1
  const auto violations = validate_mdp(mdp);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("(0,0)") != std::string::npos);
  CHECK(violations[0].find("1.1") != std::string::npos);
}

TEST_CASE("validate_mdp rejects gamma outside (0,1)") {
  FiniteMdp mdp = two_state_one_action();
  mdp.gamma = 1.0;
  const auto violations = validate_mdp(mdp);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("gamma") != std::string::npos);
}

TEST_CASE("validate_mdp rejects non-finite costs") {
  FiniteMdp mdp = two_state_one_action();
  mdp.cost_table(1, 0) = std::numeric_limits<double>::infinity();
  CHECK(validate_mdp(mdp).size() == 1);
}

TEST_CASE("closed_loop_matrix on a swap chain is the permutation matrix") {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = 0.5;
  Matrix P(2, 2);
  P << 0.0, 1.0, 1.0, 0.0;
  mdp.transition = {P};
  mdp.cost_table = Matrix::Zero(2, 1);
  const Matrix chain = closed_loop_matrix(mdp, DeterministicPolicy{{0, 0}});
  CHECK(chain(0, 1) == 1.0);
  CHECK(chain(1, 0) == 1.0);
  CHECK(chain(0, 0) == 0.0);
}

TEST_CASE("closed_loop_matrix of an identity chain is the identity") {
  FiniteMdp mdp;
  mdp.n_states = 3;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  mdp.transition = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  mdp.cost_table = Matrix::Zero(3, 2);
  const Matrix chain = closed_loop_matrix(mdp, DeterministicPolicy{{1, 0, 1}});
  CHECK((chain - Matrix::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("closed_loop_matrix rows re-sum to one on a random MDP") {
  const FiniteMdp mdp = make_random_mdp(3, 2, 0.9, 42);
  const Matrix chain = closed_loop_matrix(mdp, DeterministicPolicy{{1, 0, 1}});
  for (int s = 0; s < 3; ++s) CHECK(std::abs(chain.row(s).sum() - 1.0) <= 1e-12);
}

TEST_CASE("closed_loop_matrix rejects invalid policies") {
  const FiniteMdp mdp = make_random_mdp(3, 2, 0.9, 42);
  CHECK_THROWS_AS(closed_loop_matrix(mdp, DeterministicPolicy{{0, 2, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(closed_loop_matrix(mdp, DeterministicPolicy{{0, 0}}), std::invalid_argument);
}

TEST_CASE("apply_transition moves a Dirac along a deterministic edge") {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = 0.9;
  Matrix P(2, 2);
  P << 0.0, 1.0, 0.0, 1.0;
  mdp.transition = {P};
  mdp.cost_table = Matrix::Zero(2, 1);
  const Measure next = apply_transition(mdp, DeterministicPolicy{{0, 0}}, Measure::dirac(0, 2));
  CHECK(next[0] == 0.0);
  CHECK(next[1] == 1.0);
}

TEST_CASE("apply_transition matches the hand matrix-vector product") {
  const FiniteMdp mdp = make_two_state_chain();
  const Measure next = apply_transition(mdp, DeterministicPolicy{{0, 0}},
                                        Measure(Vector::Constant(2, 0.5)));
  CHECK(next[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(next[1] == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("apply_transition fixes the stationary measure") {
  const FiniteMdp mdp = make_two_state_chain();
  const DeterministicPolicy pi{{0, 0}};
  const auto stat = stationary_measure(mdp, pi);
  const Measure next = apply_transition(mdp, pi, stat.measure);
  CHECK((next.weights() - stat.measure.weights()).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("stationary_measure solves the two-state chain exactly") {
  const FiniteMdp mdp = make_two_state_chain();
  const auto stat = stationary_measure(mdp, DeterministicPolicy{{0, 0}});
  CHECK(stat.unique);
  CHECK(stat.measure[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(stat.measure[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("stationary_measure flags the identity chain as non-unique") {
  const auto stat = stationary_measure(Matrix::Identity(3, 3));
  CHECK_FALSE(stat.unique);
  for (int s = 0; s < 3; ++s) CHECK(stat.measure[s] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("stationary_measure handles the periodic two-cycle via averaging") {
  Matrix P(2, 2);
  P << 0.0, 1.0, 1.0, 0.0;
  const auto stat = stationary_measure(P);
  CHECK(stat.unique);
  CHECK(stat.measure[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(stat.measure[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("sample_trajectory is deterministic on a deterministic chain") {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = 0.9;
  Matrix P(2, 2);
  P << 0.0, 1.0, 0.0, 1.0;
  mdp.transition = {P};
  mdp.cost_table = Matrix::Zero(2, 1);
  for (std::uint64_t seed : {7ULL, 99ULL}) {
    const auto traj = sample_trajectory(mdp, DeterministicPolicy{{0, 0}}, 0, 5, seed);
    CHECK(traj.states == std::vector<int>{0, 1, 1, 1, 1, 1});
  }
}

TEST_CASE("sample_trajectory varies with the seed but keeps valid transitions") {
  const FiniteMdp mdp = make_two_state_chain();
  const DeterministicPolicy pi{{0, 0}};
  const auto a = sample_trajectory(mdp, pi, 0, 200, 1);
  const auto b = sample_trajectory(mdp, pi, 0, 200, 2);
  const auto a_again = sample_trajectory(mdp, pi, 0, 200, 1);
  CHECK(a.states != b.states);
  CHECK(a.states == a_again.states);
  CHECK(a.actions.size() == 200);
  CHECK(a.costs.size() == 200);
  CHECK(a.states.size() == 201);
  for (std::size_t k = 0; k + 1 < a.states.size(); ++k)
    CHECK(mdp.transition[0](a.states[k], a.states[k + 1]) > 0.0);
}

TEST_CASE("empirical state frequencies approach the stationary measure") {
  const FiniteMdp mdp = make_two_state_chain();
  const DeterministicPolicy pi{{0, 0}};
  const auto traj = sample_trajectory(mdp, pi, 0, 100000, 2026);
  double visits0 = 0;
  for (int s : traj.states) visits0 += (s == 0);
  const double freq0 = visits0 / static_cast<double>(traj.states.size());
  CHECK(std::abs(freq0 - 2.0 / 3.0) < 0.02);
}

TEST_CASE("apply_transition preserves the simplex and is linear") {
  SplitMix64Rng rng(314159);
  for (int draw = 0; draw < 1000; ++draw) {
    const int n = 2 + rng.next_int(4);
    const int m = 1 + rng.next_int(3);
    const FiniteMdp mdp = make_random_mdp(n, m, 0.9, rng.next_u64());
    const DeterministicPolicy pi = make_random_policy(mdp, rng);
    const Measure rho1(rng.next_simplex_point(n));
    const Measure rho2(rng.next_simplex_point(n));
    const double alpha = rng.next_double();

    const Measure out = apply_transition(mdp, pi, rho1);
    CHECK(out.weights().minCoeff() >= 0.0);
    CHECK(std::abs(out.weights().sum() - 1.0) <= 1e-12);

    const Measure blend(alpha * rho1.weights() + (1.0 - alpha) * rho2.weights());
    const Vector lhs = apply_transition(mdp, pi, blend).weights();
    const Vector rhs = alpha * apply_transition(mdp, pi, rho1).weights() +
                       (1.0 - alpha) * apply_transition(mdp, pi, rho2).weights();
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("k-fold closed-loop power equals k repeated transitions") {
  SplitMix64Rng rng(2718);
  for (int draw = 0; draw < 50; ++draw) {
    const int n = 2 + rng.next_int(4);
    const FiniteMdp mdp = make_random_mdp(n, 2, 0.9, rng.next_u64());
    const DeterministicPolicy pi = make_random_policy(mdp, rng);
    const Matrix chain = closed_loop_matrix(mdp, pi);
    const int k = 1 + rng.next_int(6);

    Measure rho(rng.next_simplex_point(n));
    Matrix power = Matrix::Identity(n, n);
    Measure iterated = rho;
    for (int i = 0; i < k; ++i) {
      power = power * chain;
      iterated = apply_transition(mdp, pi, iterated);
    }
    const Vector direct = power.transpose() * rho.weights();
    CHECK((direct - iterated.weights()).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("stationary_measure output is a fixed point on random chains") {
  SplitMix64Rng rng(555);
  for (int draw = 0; draw < 50; ++draw) {
    const int n = 2 + rng.next_int(4);
    const FiniteMdp mdp = make_random_mdp(n, 2, 0.9, rng.next_u64());
    const DeterministicPolicy pi = make_random_policy(mdp, rng);
    const auto stat = stationary_measure(mdp, pi);
    const Measure next = apply_transition(mdp, pi, stat.measure);
    CHECK((next.weights() - stat.measure.weights()).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("measure construction guards the simplex invariants") {
  CHECK_THROWS_AS(Measure{Vector::Constant(2, 0.6)}, std::invalid_argument);
  Vector negative(2);
  negative << 1.5, -0.5;
  CHECK_THROWS_AS(Measure{negative}, std::invalid_argument);
  CHECK_THROWS_AS(Measure::dirac(2, 2), std::invalid_argument);
  const Measure ok = Measure::dirac(1, 3);
  CHECK(ok[1] == 1.0);
}

TEST_CASE("enumerate_policies is lexicographic and capped") {
  const auto policies = enumerate_policies(2, 2);
  REQUIRE(policies.size() == 4);
  CHECK(policies[0].action_of == std::vector<int>{0, 0});
  CHECK(policies[1].action_of == std::vector<int>{0, 1});
  CHECK(policies[2].action_of == std::vector<int>{1, 0});
  CHECK(policies[3].action_of == std::vector<int>{1, 1});
  CHECK_THROWS_AS(enumerate_policies(20, 4), SizeError);
}
