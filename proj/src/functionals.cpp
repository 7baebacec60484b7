#include "measure_mdp/functionals.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace mmdp {

std::string to_string(StageCostKind kind) {
  switch (kind) {
    case StageCostKind::Linear: return "linear";
    case StageCostKind::LinearPlusVariance: return "linear_plus_variance";
    case StageCostKind::LinearPlusKl: return "linear_plus_kl";
  }
  return "?";
}

StageCostKind stage_cost_kind_from_string(const std::string& name) {
  if (name == "linear") return StageCostKind::Linear;
  if (name == "linear_plus_variance") return StageCostKind::LinearPlusVariance;
  if (name == "linear_plus_kl") return StageCostKind::LinearPlusKl;
  throw std::invalid_argument("unknown stage cost kind: " + name);
}

StageCostFunctional::StageCostFunctional(StageCostKind kind, Matrix cost_table, double beta,
                                         std::optional<Measure> reference)
    : kind_(kind), cost_table_(std::move(cost_table)), beta_(beta), reference_(std::move(reference)) {
  if (beta_ < 0.0) throw std::invalid_argument("stage cost: beta must be >= 0");
  if (kind_ == StageCostKind::LinearPlusKl) {
    if (!reference_) throw std::invalid_argument("KL stage cost needs a reference measure");
    if (reference_->size() != cost_table_.rows())
      throw std::invalid_argument("KL reference measure has wrong size");
    for (int s = 0; s < reference_->size(); ++s)
      if ((*reference_)[s] <= 0.0)
        throw std::domain_error("KL stage cost requires a strictly positive reference measure");
  }
}

StageCostFunctional StageCostFunctional::linear(const FiniteMdp& mdp) {
  return StageCostFunctional(StageCostKind::Linear, mdp.cost_table, 0.0, std::nullopt);
}

StageCostFunctional StageCostFunctional::linear_plus_variance(const FiniteMdp& mdp, double beta) {
  return StageCostFunctional(StageCostKind::LinearPlusVariance, mdp.cost_table, beta, std::nullopt);
}

StageCostFunctional StageCostFunctional::linear_plus_kl(const FiniteMdp& mdp, double beta,
                                                        Measure reference) {
  return StageCostFunctional(StageCostKind::LinearPlusKl, mdp.cost_table, beta,
                             std::move(reference));
}

StageCostFunctional StageCostFunctional::with_shift(double shift) const {
  StageCostFunctional copy = *this;
  copy.shift_ = shift;
  return copy;
}

Vector StageCostFunctional::policy_cost(const DeterministicPolicy& policy) const {
  const int n = static_cast<int>(cost_table_.rows());
  Vector costs(n);
  for (int s = 0; s < n; ++s) costs[s] = cost_table_(s, policy(s));
  return costs;
}

double StageCostFunctional::eval(const Measure& rho, const DeterministicPolicy& policy) const {
  if (rho.size() != cost_table_.rows())
    throw std::invalid_argument("stage cost: measure size mismatch");
  const Vector costs = policy_cost(policy);
  const double mean = costs.dot(rho.weights());

  switch (kind_) {
    case StageCostKind::Linear:
      return mean - shift_;
    case StageCostKind::LinearPlusVariance: {
      const double second_moment = costs.cwiseProduct(costs).dot(rho.weights());
      return mean + beta_ * (second_moment - mean * mean) - shift_;
    }
    case StageCostKind::LinearPlusKl: {
      double kl = 0.0;
      for (int s = 0; s < rho.size(); ++s) {
        const double p = rho[s];
        if (p == 0.0) continue;
        kl += p * std::log(p / (*reference_)[s]);
      }
      return mean + beta_ * std::max(kl, 0.0) - shift_;
    }
  }
  throw std::logic_error("stage cost: unreachable");
}

namespace {

DeterministicPolicy greedy_from_values(const FiniteMdp& mdp, const Vector& v) {
  DeterministicPolicy pi;
  pi.action_of.assign(static_cast<std::size_t>(mdp.n_states), 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double q = mdp.cost_table(s, a) + mdp.gamma * mdp.transition[a].row(s).dot(v);
      if (q < best) {
        best = q;
        pi.action_of[static_cast<std::size_t>(s)] = a;
      }
    }
  }
  return pi;
}

Vector bellman_backup(const FiniteMdp& mdp, const Vector& v) {
  Vector next(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a)
      best = std::min(best, mdp.cost_table(s, a) + mdp.gamma * mdp.transition[a].row(s).dot(v));
    next[s] = best;
  }
  return next;
}

double bellman_residual(const FiniteMdp& mdp, const Vector& v) {
  return (bellman_backup(mdp, v) - v).lpNorm<Eigen::Infinity>();
}

// Policy-iteration polish from a value estimate. Succeeds when the greedy
// fixed point's Bellman residual reaches the numerical floor.
bool polish(const FiniteMdp& mdp, Vector& v, double tol) {
  DeterministicPolicy pi = greedy_from_values(mdp, v);
  for (int round = 0; round < 200; ++round) {
    const Vector v_eval = policy_value_linear(mdp, pi);
    DeterministicPolicy improved = greedy_from_values(mdp, v_eval);
    const double floor =
        std::max(tol, 1e-14 * std::max(1.0, v_eval.lpNorm<Eigen::Infinity>()));
    if (bellman_residual(mdp, v_eval) <= floor) {
      v = v_eval;
      return true;
    }
    if (improved == pi) return false;
    pi = improved;
  }
  return false;
}

}  // namespace

Vector policy_value_linear(const FiniteMdp& mdp, const DeterministicPolicy& policy) {
  require_valid_policy(mdp, policy);
  const Matrix chain = closed_loop_matrix(mdp, policy);
  Vector costs(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) costs[s] = mdp.cost_table(s, policy(s));
  const Matrix system = Matrix::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * chain;
  return system.partialPivLu().solve(costs);
}

ValueSolution solve_optimal_linear(const FiniteMdp& mdp, double tol, long max_iterations) {
  {
    const auto violations = validate_mdp(mdp);
    if (!violations.empty())
      throw std::invalid_argument("solve_optimal_linear: invalid MDP: " + violations.front());
  }

  Vector v = Vector::Zero(mdp.n_states);
  long iterations = 0;
  long next_polish = 1;
  bool converged = false;
  for (; iterations < max_iterations; ++iterations) {
    if (iterations + 1 == next_polish) {
      next_polish *= 2;
      if (polish(mdp, v, tol)) {
        converged = true;
        break;
      }
    }
    Vector next = bellman_backup(mdp, v);
    const double change = (next - v).lpNorm<Eigen::Infinity>();
    v = std::move(next);
    if (change <= tol) {
      converged = true;
      polish(mdp, v, tol);
      break;
    }
  }

  const double residual = bellman_residual(mdp, v);
  if (!converged) {
    const double floor = std::max(tol, 1e-14 * std::max(1.0, v.lpNorm<Eigen::Infinity>()));
    if (residual > floor) {
      std::ostringstream msg;
      msg << "value iteration hit the cap of " << max_iterations
          << " sweeps with Bellman residual " << residual;
      throw NumericalError(msg.str());
    }
  }

  ValueSolution solution;
  solution.v_star = v;
  solution.q_star.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      solution.q_star(s, a) = mdp.cost_table(s, a) + mdp.gamma * mdp.transition[a].row(s).dot(v);
  solution.pi_star = greedy_from_values(mdp, v);
  solution.residual = residual;
  solution.iterations = iterations;
  return solution;
}

double value_functional(const ValueSolution& solution, const Measure& rho) {
  if (rho.size() != solution.v_star.size())
    throw std::invalid_argument("value_functional: size mismatch");
  return solution.v_star.dot(rho.weights());
}

double q_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                    const ValueFunctional& value, const Measure& rho,
                    const DeterministicPolicy& policy) {
  return functional.eval(rho, policy) + mdp.gamma * value(apply_transition(mdp, policy, rho));
}

double advantage_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                            const ValueFunctional& value, const Measure& rho,
                            const DeterministicPolicy& policy) {
  return q_functional(mdp, functional, value, rho, policy) - value(rho);
}

RolloutValue discounted_rollout(const FiniteMdp& mdp, const MeasureStageFn& stage,
                                const DeterministicPolicy& policy, const Measure& rho0,
                                double tol, long max_steps) {
  require_valid_policy(mdp, policy);
  if (tol <= 0.0) throw std::invalid_argument("discounted_rollout: tol must be positive");

  const double gamma = mdp.gamma;
  double accumulated = 0.0;
  double discount = 1.0;
  double bound = 0.0;
  Measure rho = rho0;
  for (long k = 0; k < max_steps; ++k) {
    const double cost = stage(rho, policy);
    if (!std::isfinite(cost))
      throw NumericalError("discounted_rollout: stage functional returned a non-finite value");
    accumulated += discount * cost;
    bound = std::max(bound, std::abs(cost));
    discount *= gamma;
    const double tail = discount * (2.0 * bound) / (1.0 - gamma);
    if (tail <= tol) return RolloutValue{accumulated, k + 1};
    rho = apply_transition(mdp, policy, rho);
  }
  throw NumericalError("discounted_rollout: tail bound not reached within the step cap");
}

RolloutValue nonlinear_rollout_value(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                     const DeterministicPolicy& policy, const Measure& rho0,
                                     double tol) {
  return discounted_rollout(
      mdp,
      [&functional](const Measure& rho, const DeterministicPolicy& pi) {
        return functional.eval(rho, pi);
      },
      policy, rho0, tol);
}

NonlinearSolution solve_optimal_nonlinear(const FiniteMdp& mdp,
                                          const StageCostFunctional& functional,
                                          const Measure& rho0, double tol, std::size_t cap) {
  const auto policies = enumerate_policies(mdp.n_states, mdp.n_actions, cap);
  NonlinearSolution best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& pi : policies) {
    const double value = nonlinear_rollout_value(mdp, functional, pi, rho0, tol).value;
    if (value < best.value) {
      best.value = value;
      best.policy = pi;
    }
  }
  return best;
}

namespace {

// Strongly connected components of the positive-probability graph, Tarjan.
// Returns component index per state; components with no outgoing edge are the
// recurrent classes.
struct SccResult {
  std::vector<int> component;
  int count = 0;
};

SccResult strongly_connected_components(const Matrix& chain) {
  const int n = static_cast<int>(chain.rows());
  SccResult result;
  result.component.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> index(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  int next_index = 0;

  // Iterative Tarjan (explicit frames) to stay safe on larger chains.
  struct Frame {
    int v;
    int next_edge;
  };
  for (int start = 0; start < n; ++start) {
    if (index[static_cast<std::size_t>(start)] != -1) continue;
    std::vector<Frame> frames{{start, 0}};
    index[static_cast<std::size_t>(start)] = low[static_cast<std::size_t>(start)] = next_index++;
    stack.push_back(start);
    on_stack[static_cast<std::size_t>(start)] = true;
    while (!frames.empty()) {
      Frame& frame = frames.back();
      const int v = frame.v;
      bool descended = false;
      while (frame.next_edge < n) {
        const int w = frame.next_edge++;
        if (chain(v, w) <= 0.0) continue;
        if (index[static_cast<std::size_t>(w)] == -1) {
          index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = next_index++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = true;
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[static_cast<std::size_t>(w)])
          low[static_cast<std::size_t>(v)] =
              std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
      }
      if (descended) continue;
      if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = false;
          result.component[static_cast<std::size_t>(w)] = result.count;
          if (w == v) break;
        }
        ++result.count;
      }
      frames.pop_back();
      if (!frames.empty()) {
        Frame& parent = frames.back();
        low[static_cast<std::size_t>(parent.v)] = std::min(
            low[static_cast<std::size_t>(parent.v)], low[static_cast<std::size_t>(v)]);
      }
    }
  }
  return result;
}

// Unique stationary measure of one recurrent class, solved exactly on the
// restricted chain.
Vector class_stationary(const Matrix& chain, const std::vector<int>& states, int n) {
  const int k = static_cast<int>(states.size());
  Matrix sub(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      sub(i, j) = chain(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]);
  Matrix system = sub.transpose() - Matrix::Identity(k, k);
  system.row(k - 1).setOnes();
  Vector rhs = Vector::Zero(k);
  rhs[k - 1] = 1.0;
  Vector local = system.fullPivLu().solve(rhs);
  Vector full = Vector::Zero(n);
  for (int i = 0; i < k; ++i) {
    double w = local[i];
    if (w < 0.0 && w > -1e-9) w = 0.0;
    full[states[static_cast<std::size_t>(i)]] = w;
  }
  const double total = full.sum();
  if (total <= 0.0) throw NumericalError("class_stationary: degenerate solve");
  return full / total;
}

}  // namespace

SteadyState optimal_steady_state(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                 std::size_t cap) {
  const auto policies = enumerate_policies(mdp.n_states, mdp.n_actions, cap);
  const int n = mdp.n_states;

  bool found = false;
  double best_value = std::numeric_limits<double>::infinity();
  Measure best_measure = Measure::uniform(n);
  DeterministicPolicy best_policy;
  double best_residual = 0.0;

  for (const auto& pi : policies) {
    const Matrix chain = closed_loop_matrix(mdp, pi);

    // Candidate stationary measures: one per recurrent class (the extreme
    // points of the stationary polytope) plus the from-uniform Cesaro limit.
    std::vector<Vector> candidates;
    const SccResult scc = strongly_connected_components(chain);
    for (int comp = 0; comp < scc.count; ++comp) {
      std::vector<int> states;
      for (int s = 0; s < n; ++s)
        if (scc.component[static_cast<std::size_t>(s)] == comp) states.push_back(s);
      if (states.empty()) continue;
      bool leaks = false;
      for (int s : states) {
        for (int t = 0; t < n && !leaks; ++t)
          if (chain(s, t) > 0.0 && scc.component[static_cast<std::size_t>(t)] != comp) leaks = true;
        if (leaks) break;
      }
      if (!leaks) candidates.push_back(class_stationary(chain, states, n));
    }
    candidates.push_back(stationary_measure(chain).measure.weights());

    for (const Vector& weights : candidates) {
      Measure rho(weights);
      const double value = functional.eval(rho, pi);
      if (!found || value < best_value) {
        found = true;
        best_value = value;
        best_measure = rho;
        best_policy = pi;
        best_residual =
            (chain.transpose() * rho.weights() - rho.weights()).lpNorm<Eigen::Infinity>();
      }
    }
  }

  if (!found) throw NumericalError("optimal_steady_state: no stationary candidates");
  return SteadyState{best_measure, best_value, best_policy, best_residual};
}

SolvedProblem solve_problem(const FiniteMdp& mdp, const StageCostFunctional& raw,
                            std::size_t cap) {
  SteadyState steady = optimal_steady_state(mdp, raw, cap);
  StageCostFunctional shifted = raw.with_shift(raw.shift() + steady.l0);
  ValueSolution solution = solve_optimal_linear(mdp);
  return SolvedProblem{std::move(solution), std::move(steady), std::move(shifted)};
}

ValueFunctional make_value_functional(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                      const ValueSolution& solution, double rollout_tol,
                                      std::size_t cap) {
  if (functional.effectively_linear()) {
    Vector v = solution.v_star;
    const double shift_offset = functional.shift() / (1.0 - mdp.gamma);
    return [v, shift_offset](const Measure& rho) { return v.dot(rho.weights()) - shift_offset; };
  }
  const auto policies = enumerate_policies(mdp.n_states, mdp.n_actions, cap);
  FiniteMdp mdp_copy = mdp;
  StageCostFunctional functional_copy = functional;
  return [mdp_copy, functional_copy, policies, rollout_tol](const Measure& rho) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pi : policies)
      best = std::min(best,
                      nonlinear_rollout_value(mdp_copy, functional_copy, pi, rho, rollout_tol).value);
    return best;
  };
}

}  // namespace mmdp
