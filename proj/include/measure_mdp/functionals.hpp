#pragma once

#include <functional>
#include <optional>

#include "measure_mdp/mdp.hpp"

namespace mmdp {

enum class StageCostKind { Linear, LinearPlusVariance, LinearPlusKl };

std::string to_string(StageCostKind kind);
StageCostKind stage_cost_kind_from_string(const std::string& name);

// Stage-cost functional L[rho, pi]. The linear kind is the expected stage
// cost; the variance and KL kinds add a genuinely nonlinear term in rho with
// weight beta. `shift` is the constant subtracted so that the optimal steady
// pair evaluates to zero.
class StageCostFunctional {
 public:
  static StageCostFunctional linear(const FiniteMdp& mdp);
  static StageCostFunctional linear_plus_variance(const FiniteMdp& mdp, double beta);
  // KL term is measured against `reference`, which must be strictly positive.
  static StageCostFunctional linear_plus_kl(const FiniteMdp& mdp, double beta, Measure reference);

  StageCostKind kind() const { return kind_; }
  double beta() const { return beta_; }
  double shift() const { return shift_; }
  const std::optional<Measure>& reference() const { return reference_; }

  // Same functional with a different normalizing shift.
  StageCostFunctional with_shift(double shift) const;

  // True when evaluation is exactly linear in rho (Linear kind, or beta == 0).
  bool effectively_linear() const { return kind_ == StageCostKind::Linear || beta_ == 0.0; }

  double eval(const Measure& rho, const DeterministicPolicy& policy) const;

  // s -> l(s, pi(s)), unshifted.
  Vector policy_cost(const DeterministicPolicy& policy) const;

 private:
  StageCostFunctional(StageCostKind kind, Matrix cost_table, double beta,
                      std::optional<Measure> reference);

  StageCostKind kind_;
  Matrix cost_table_;
  double beta_ = 0.0;
  std::optional<Measure> reference_;
  double shift_ = 0.0;
};

inline double eval_stage(const StageCostFunctional& functional, const Measure& rho,
                         const DeterministicPolicy& policy) {
  return functional.eval(rho, policy);
}

// Classic discounted solution of the underlying MDP.
struct ValueSolution {
  Vector v_star;
  Matrix q_star;
  DeterministicPolicy pi_star;
  double residual = 0.0;   // final Bellman sup-norm residual
  long iterations = 0;
};

// Optimal steady pair: rho_star stationary under `policy`, with pre-shift
// steady stage cost l0.
struct SteadyState {
  Measure rho_star;
  double l0 = 0.0;
  DeterministicPolicy policy;
  double stationary_residual = 0.0;
};

// Value iteration to sup-norm change <= tol (cap 1e6 sweeps) with an exact
// policy-evaluation polish, so near-one discount factors still terminate with
// a certified Bellman residual.
ValueSolution solve_optimal_linear(const FiniteMdp& mdp, double tol = 1e-12,
                                   long max_iterations = 1000000);

// Exact fixed-policy value: solves v = l_pi + gamma P_pi v directly.
Vector policy_value_linear(const FiniteMdp& mdp, const DeterministicPolicy& policy);

// V*[rho] = E_{s~rho} v*(s) (Dirac bridge of the linear setting).
double value_functional(const ValueSolution& solution, const Measure& rho);

using ValueFunctional = std::function<double(const Measure&)>;
using MeasureStageFn = std::function<double(const Measure&, const DeterministicPolicy&)>;

// Q*[rho,pi] = L[rho,pi] + gamma V*[T_pi rho].
double q_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                    const ValueFunctional& value, const Measure& rho,
                    const DeterministicPolicy& policy);

// A*[rho,pi] = Q*[rho,pi] - V*[rho].
double advantage_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                            const ValueFunctional& value, const Measure& rho,
                            const DeterministicPolicy& policy);

struct RolloutValue {
  double value = 0.0;
  long steps = 0;
};

// Truncated discounted rollout of an arbitrary stage functional along the
// closed loop of `policy`, stopping once the geometric tail bound (with the
// empirical magnitude bound doubled) drops below tol.
RolloutValue discounted_rollout(const FiniteMdp& mdp, const MeasureStageFn& stage,
                                const DeterministicPolicy& policy, const Measure& rho0,
                                double tol, long max_steps = 100000000);

RolloutValue nonlinear_rollout_value(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                     const DeterministicPolicy& policy, const Measure& rho0,
                                     double tol);

struct NonlinearSolution {
  double value = 0.0;
  DeterministicPolicy policy;
};

// Brute-force minimum over all deterministic stationary policies of the
// discounted rollout from rho0. Lexicographic tie-break.
NonlinearSolution solve_optimal_nonlinear(const FiniteMdp& mdp,
                                          const StageCostFunctional& functional,
                                          const Measure& rho0, double tol,
                                          std::size_t cap = kDefaultPolicyCap);

// Scans every deterministic policy and every extreme stationary measure of
// its closed loop (plus the from-uniform Cesaro measure) for the pair
// minimizing the functional. `l0` is the pre-shift minimum.
SteadyState optimal_steady_state(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                 std::size_t cap = kDefaultPolicyCap);

inline Measure dirac(int s, int n) { return Measure::dirac(s, n); }

// V* as a functional of the measure: exact dot with v_star in the linear
// case, enumerated rollout minimum otherwise.
ValueFunctional make_value_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                      const ValueSolution& solution, double rollout_tol = 1e-9,
                                      std::size_t cap = kDefaultPolicyCap);

// Standard solve pipeline: classic solution, optimal steady pair, and the
// stage-cost functional re-shifted so it vanishes there.
struct SolvedProblem {
  ValueSolution solution;
  SteadyState steady;
  StageCostFunctional functional;
};

SolvedProblem solve_problem(const FiniteMdp& mdp, const StageCostFunctional& raw,
                            std::size_t cap = kDefaultPolicyCap);

}  // namespace mmdp
