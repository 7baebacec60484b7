#include "measure_mdp/mdp.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace mmdp {

Measure::Measure(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw std::invalid_argument("Measure: empty weight vector");
  double sum = 0.0;
  for (int i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w)) throw std::invalid_argument("Measure: non-finite weight");
    if (w < -kSimplexTol) {
      std::ostringstream msg;
      msg << "Measure: negative weight " << w << " at index " << i;
      throw std::invalid_argument(msg.str());
    }
    if (w < 0.0) weights_[i] = 0.0;
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    std::ostringstream msg;
    msg << "Measure: weights sum to " << sum << ", outside 1 +/- 1e-12";
    throw std::invalid_argument(msg.str());
  }
  weights_ /= sum;
}

Measure Measure::dirac(int s, int n) {
  if (s < 0 || s >= n) throw std::invalid_argument("dirac: state index out of range");
  Vector w = Vector::Zero(n);
  w[s] = 1.0;
  return Measure(std::move(w));
}

Measure Measure::uniform(int n) {
  return Measure(Vector::Constant(n, 1.0 / n));
}

std::vector<std::string> validate_mdp(const FiniteMdp& mdp) {
  std::vector<std::string> violations;
  auto add = [&violations](const std::string& s) { violations.push_back(s); };

  if (mdp.n_states <= 0) add("n_states must be positive");
  if (mdp.n_actions <= 0) add("n_actions must be positive");
  if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) {
    std::ostringstream msg;
    msg << "gamma out of (0,1): " << mdp.gamma;
    add(msg.str());
  }
  if (static_cast<int>(mdp.transition.size()) != mdp.n_actions) {
    add("transition tensor has wrong action count");
    return violations;
  }
  for (int a = 0; a < mdp.n_actions; ++a) {
    if (mdp.transition[a].rows() != mdp.n_states || mdp.transition[a].cols() != mdp.n_states) {
      std::ostringstream msg;
      msg << "transition matrix for action " << a << " has wrong shape";
      add(msg.str());
      return violations;
    }
  }
  if (mdp.cost_table.rows() != mdp.n_states || mdp.cost_table.cols() != mdp.n_actions) {
    add("cost table has wrong shape");
    return violations;
  }

  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double row_sum = 0.0;
      bool ok = true;
      for (int t = 0; t < mdp.n_states; ++t) {
        const double p = mdp.transition[a](s, t);
        if (!std::isfinite(p) || p < -kSimplexTol) ok = false;
        row_sum += p;
      }
      if (!ok) {
        std::ostringstream msg;
        msg << "row (" << s << "," << a << ") has negative or non-finite entries";
        add(msg.str());
      } else if (std::abs(row_sum - 1.0) > kSimplexTol) {
        std::ostringstream msg;
        msg << "row (" << s << "," << a << ") sums to " << row_sum;
        add(msg.str());
      }
      if (!std::isfinite(mdp.cost_table(s, a))) {
        std::ostringstream msg;
        msg << "cost (" << s << "," << a << ") is not finite";
        add(msg.str());
      }
    }
  }
  return violations;
}

void require_valid_policy(const FiniteMdp& mdp, const DeterministicPolicy& policy) {
  if (policy.size() != mdp.n_states)
    throw std::invalid_argument("policy length does not match n_states");
  for (int s = 0; s < mdp.n_states; ++s) {
    const int a = policy(s);
    if (a < 0 || a >= mdp.n_actions)
      throw std::invalid_argument("policy action index out of range at state " + std::to_string(s));
  }
}

Matrix closed_loop_matrix(const FiniteMdp& mdp, const DeterministicPolicy& policy) {
  require_valid_policy(mdp, policy);
  Matrix chain(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) chain.row(s) = mdp.transition[policy(s)].row(s);
  return chain;
}

Measure apply_transition(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                         const Measure& rho) {
  require_valid_policy(mdp, policy);
  Vector next = Vector::Zero(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    const double mass = rho[s];
    if (mass == 0.0) continue;
    next += mass * mdp.transition[policy(s)].row(s).transpose();
  }
  return Measure(std::move(next));
}

namespace {

double stationarity_residual(const Matrix& chain, const Vector& rho) {
  return (chain.transpose() * rho - rho).lpNorm<Eigen::Infinity>();
}

}  // namespace

StationaryResult stationary_measure(const Matrix& chain) {
  const int n = static_cast<int>(chain.rows());

  // Cesaro average of the power iteration from the uniform start. The plain
  // iterate converges geometrically on aperiodic chains; the running average
  // handles periodic ones at O(1/K).
  Vector iterate = Vector::Constant(n, 1.0 / n);
  Vector average = iterate;
  constexpr long kMaxIterations = 1000000;
  constexpr long kAveragingWindow = 50000;
  long k = 0;
  for (; k < kMaxIterations; ++k) {
    Vector next = chain.transpose() * iterate;
    average = (average * static_cast<double>(k + 1) + next) / static_cast<double>(k + 2);
    iterate = std::move(next);
    if (stationarity_residual(chain, iterate) <= 1e-13) {
      average = iterate;
      break;
    }
    if (k + 1 >= kAveragingWindow) break;
  }

  // Exactly-stationary polish: project the average onto the nullspace of
  // (P^T - I) intersected with the sum-to-one hyperplane. The nullspace
  // dimension equals the number of recurrent classes.
  Matrix K = chain.transpose() - Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double sv_tol = 1e-9 * std::max(1.0, sv.size() > 0 ? sv[0] : 1.0);
  int nullity = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= sv_tol) ++nullity;
  if (nullity == 0) nullity = 1;  // eigenvalue 1 always exists for stochastic P

  Matrix basis = svd.matrixV().rightCols(nullity);  // columns span {rho : P^T rho = rho}

  // min ||basis*z - average|| s.t. 1^T basis z = 1 via KKT.
  Matrix kkt = Matrix::Zero(nullity + 1, nullity + 1);
  kkt.topLeftCorner(nullity, nullity) = basis.transpose() * basis;
  Vector ones_b = basis.transpose() * Vector::Ones(n);
  kkt.topRightCorner(nullity, 1) = ones_b;
  kkt.bottomLeftCorner(1, nullity) = ones_b.transpose();
  Vector rhs(nullity + 1);
  rhs.head(nullity) = basis.transpose() * average;
  rhs[nullity] = 1.0;
  Vector sol = kkt.fullPivLu().solve(rhs);
  Vector polished = basis * sol.head(nullity);

  // Stationary vectors can pick up -1e-16 noise on their zero entries.
  for (int i = 0; i < n; ++i)
    if (polished[i] < 0.0 && polished[i] > -1e-9) polished[i] = 0.0;
  const double total = polished.sum();
  if (total <= 0.0) throw NumericalError("stationary_measure: polish produced a degenerate vector");
  polished /= total;

  const double residual = stationarity_residual(chain, polished);
  if (residual > kStationaryTol) {
    std::ostringstream msg;
    msg << "stationary_measure: residual " << residual << " exceeds " << kStationaryTol << " after "
        << k << " iterations";
    throw NumericalError(msg.str());
  }
  return StationaryResult{Measure(std::move(polished)), nullity <= 1, residual};
}

StationaryResult stationary_measure(const FiniteMdp& mdp, const DeterministicPolicy& policy) {
  return stationary_measure(closed_loop_matrix(mdp, policy));
}

StateTrajectory sample_trajectory(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                                  int s0, int horizon, std::uint64_t seed) {
  require_valid_policy(mdp, policy);
  if (s0 < 0 || s0 >= mdp.n_states) throw std::invalid_argument("sample_trajectory: bad s0");
  if (horizon < 1) throw std::invalid_argument("sample_trajectory: horizon must be >= 1");

  SplitMix64Rng rng(seed);
  StateTrajectory traj;
  traj.seed = seed;
  traj.states.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.states.push_back(s0);
  int s = s0;
  for (int k = 0; k < horizon; ++k) {
    const int a = policy(s);
    traj.actions.push_back(a);
    traj.costs.push_back(mdp.cost_table(s, a));
    s = rng.sample_categorical(mdp.transition[a].row(s).transpose());
    traj.states.push_back(s);
  }
  return traj;
}

std::vector<DeterministicPolicy> enumerate_policies(int n_states, int n_actions,
                                                    std::size_t cap) {
  double count = std::pow(static_cast<double>(n_actions), n_states);
  if (count > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "policy enumeration needs " << count << " policies, cap is " << cap
        << "; use the linear solver or sampled policy sets instead";
    throw SizeError(msg.str());
  }
  std::vector<DeterministicPolicy> policies;
  policies.reserve(static_cast<std::size_t>(count));
  DeterministicPolicy pi;
  pi.action_of.assign(static_cast<std::size_t>(n_states), 0);
  while (true) {
    policies.push_back(pi);
    int s = n_states - 1;  // state 0 is the most significant digit
    while (s >= 0) {
      if (++pi.action_of[static_cast<std::size_t>(s)] < n_actions) break;
      pi.action_of[static_cast<std::size_t>(s)] = 0;
      --s;
    }
    if (s < 0) break;
  }
  return policies;
}

}  // namespace mmdp
