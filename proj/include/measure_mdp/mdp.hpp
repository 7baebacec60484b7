#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "measure_mdp/rng.hpp"

namespace mmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown when an iterative routine fails to meet its residual contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a brute-force enumeration would exceed its cap.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kSimplexTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

// Probability vector over the state set. Nonnegative, sums to one within
// kSimplexTol; drift beyond the tolerance is an error rather than being
// silently normalized away. Renormalization happens here, at construction,
// and nowhere else.
class Measure {
 public:
  explicit Measure(Vector weights);

  static Measure dirac(int s, int n);
  static Measure uniform(int n);

  const Vector& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }

 private:
  Vector weights_;
};

// π : states -> action indices.
struct DeterministicPolicy {
  std::vector<int> action_of;

  int operator()(int s) const { return action_of[static_cast<std::size_t>(s)]; }
  int size() const { return static_cast<int>(action_of.size()); }
  bool operator==(const DeterministicPolicy& other) const = default;
};

// Finite MDP: transition tensor P[s][a][s'], stage-cost table l(s,a), and a
// discount factor in (0,1). `transition[a]` holds the n x n matrix whose row
// s is P[s][a][.].
struct FiniteMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Matrix> transition;
  Matrix cost_table;
  double gamma = 0.0;

  // Row P[s][a][.] as a column vector view.
  Vector transition_row(int s, int a) const { return transition[a].row(s).transpose(); }
};

struct StateTrajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> costs;
  std::uint64_t seed = 0;
};

struct StationaryResult {
  Measure measure;
  bool unique = true;      // false when the chain has several recurrent classes
  double residual = 0.0;   // ||rho^T P - rho^T||_inf at return
};

// Report-style validation: returns the list of violated invariants
// (row stochasticity per (s,a), finite costs, gamma range). Empty => valid.
std::vector<std::string> validate_mdp(const FiniteMdp& mdp);

void require_valid_policy(const FiniteMdp& mdp, const DeterministicPolicy& policy);

// Closed-loop chain: row s is P[s][policy(s)][.].
Matrix closed_loop_matrix(const FiniteMdp& mdp, const DeterministicPolicy& policy);

// One step of the transition operator on measures: rho+ = P_pi^T rho.
Measure apply_transition(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                         const Measure& rho);

// Stationary measure of the closed loop, reached from the uniform initial
// measure (Cesaro average of the power iteration, then polished onto the
// stationary subspace). Flags non-uniqueness when the chain has more than one
// recurrent class.
StationaryResult stationary_measure(const FiniteMdp& mdp, const DeterministicPolicy& policy);
StationaryResult stationary_measure(const Matrix& chain);

// Seeded closed-loop rollout of length `horizon` from s0; costs record
// l(s_k, a_k). Same seed => identical trajectory.
StateTrajectory sample_trajectory(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                                  int s0, int horizon, std::uint64_t seed);

// All deterministic stationary policies in lexicographic order of
// (pi(0), ..., pi(n-1)). Throws SizeError past `cap`.
std::vector<DeterministicPolicy> enumerate_policies(int n_states, int n_actions,
                                                    std::size_t cap = 4096);

constexpr std::size_t kDefaultPolicyCap = 4096;

}  // namespace mmdp
