#include "measure_mdp/dissipativity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "measure_mdp/lp.hpp"

namespace mmdp {

StorageFunctional::StorageFunctional(Vector w, Matrix M, double normalization)
    : w_(std::move(w)), M_(std::move(M)), normalization_(normalization) {
  const int n = static_cast<int>(w_.size());
  if (M_.size() == 0) M_ = Matrix::Zero(n, n);
  if (M_.rows() != n || M_.cols() != n)
    throw std::invalid_argument("storage: quadratic weight shape mismatch");
  if ((M_ - M_.transpose()).lpNorm<Eigen::Infinity>() > 1e-12)
    throw std::invalid_argument("storage: quadratic weights must be symmetric");
  affine_ = M_.isZero(0.0);
}

StorageFunctional StorageFunctional::zero(int n) {
  return StorageFunctional(Vector::Zero(n), Matrix::Zero(n, n), 0.0);
}

StorageFunctional StorageFunctional::affine(Vector w, const Measure& rho_star) {
  const double normalization = w.dot(rho_star.weights());
  return StorageFunctional(std::move(w), Matrix(), normalization);
}

StorageFunctional StorageFunctional::quadratic(Vector w, Matrix M, const Measure& rho_star) {
  const Vector& r = rho_star.weights();
  const double normalization = w.dot(r) + r.dot(M * r);
  return StorageFunctional(std::move(w), std::move(M), normalization);
}

double StorageFunctional::eval(const Measure& rho) const {
  const Vector& r = rho.weights();
  double value = w_.dot(r) - normalization_;
  if (!affine_) value += r.dot(M_ * r);
  return value;
}

double ClassKInfty::eval(double x) const {
  if (c <= 0.0) throw std::invalid_argument("class-K function needs c > 0");
  if (p < 1.0) throw std::invalid_argument("class-K function needs p >= 1");
  if (x < 0.0) throw std::domain_error("class-K function evaluated at a negative argument");
  return p == 1.0 ? c * x : c * std::pow(x, p);
}

double rotated_cost(const StageCostFunctional& functional, const StorageFunctional& storage,
                    const FiniteMdp& mdp, const Measure& rho, const DeterministicPolicy& policy) {
  const Measure next = apply_transition(mdp, policy, rho);
  return functional.eval(rho, policy) - mdp.gamma * storage.eval(next) + storage.eval(rho);
}

double rotated_value(const ValueFunctional& v_star, const StorageFunctional& storage,
                     const Measure& rho) {
  return v_star(rho) + storage.eval(rho);
}

FsdsdResiduals fsdsd_residuals(const FiniteMdp& mdp, const StageCostFunctional& functional,
                               const StorageFunctional& storage, const ClassKInfty& alpha,
                               const ValueFunctional& v_star, const Dissimilarity& dissim,
                               const Measure& rho_star, const Measure& rho,
                               const DeterministicPolicy& policy) {
  const Measure next = apply_transition(mdp, policy, rho);
  const double stage = functional.eval(rho, policy);
  const double lam = storage.eval(rho);
  const double lam_next = storage.eval(next);
  const double bound = alpha.eval(dissim.eval(rho, rho_star));

  FsdsdResiduals res;
  res.r_a = stage - mdp.gamma * lam_next + lam - bound;
  res.r_b = stage - lam_next + lam + (mdp.gamma - 1.0) * v_star(next) - bound;
  return res;
}

std::string to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::Certified: return "certified";
    case CertificateStatus::NotCertified: return "not_certified";
    case CertificateStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

CertificateStatus certificate_status_from_string(const std::string& name) {
  if (name == "certified") return CertificateStatus::Certified;
  if (name == "not_certified") return CertificateStatus::NotCertified;
  if (name == "inconclusive") return CertificateStatus::Inconclusive;
  throw std::invalid_argument("unknown certificate status: " + name);
}

namespace {

// Index layout of the synthesis LP variables: w (n), then the upper triangle
// of M when quadratic storage is on, then the alpha slope c.
struct VariableLayout {
  int n = 0;
  bool quadratic = false;

  int n_quad() const { return quadratic ? n * (n + 1) / 2 : 0; }
  int c_index() const { return n + n_quad(); }
  int total() const { return n + n_quad() + 1; }
};

// Quadratic monomials matching the symmetric-M parameterization:
// q_ii = rho_i^2, q_ij = 2 rho_i rho_j for i < j.
Vector quad_monomials(const VariableLayout& layout, const Vector& rho) {
  Vector q(layout.n_quad());
  int idx = 0;
  for (int i = 0; i < layout.n; ++i)
    for (int j = i; j < layout.n; ++j, ++idx)
      q[idx] = (i == j) ? rho[i] * rho[i] : 2.0 * rho[i] * rho[j];
  return q;
}

Matrix quad_matrix_from_vars(const VariableLayout& layout, const Vector& z) {
  Matrix M = Matrix::Zero(layout.n, layout.n);
  int idx = layout.n;
  for (int i = 0; i < layout.n; ++i)
    for (int j = i; j < layout.n; ++j, ++idx) {
      M(i, j) = z[idx];
      M(j, i) = z[idx];
    }
  return M;
}

std::vector<DeterministicPolicy> synthesis_policy_set(const FiniteMdp& mdp,
                                                      const SynthesisConfig& config,
                                                      bool& all_policies,
                                                      SplitMix64Rng rng) {
  const double count = std::pow(static_cast<double>(mdp.n_actions), mdp.n_states);
  if (count <= static_cast<double>(config.policy_cap)) {
    all_policies = true;
    return enumerate_policies(mdp.n_states, mdp.n_actions, config.policy_cap);
  }
  all_policies = false;
  std::set<std::vector<int>> seen;
  std::vector<DeterministicPolicy> policies;
  long attempts = 0;
  while (policies.size() < config.policy_cap && attempts < 100L * static_cast<long>(config.policy_cap)) {
    ++attempts;
    DeterministicPolicy pi;
    pi.action_of.resize(static_cast<std::size_t>(mdp.n_states));
    for (int s = 0; s < mdp.n_states; ++s)
      pi.action_of[static_cast<std::size_t>(s)] = rng.next_int(mdp.n_actions);
    if (seen.insert(pi.action_of).second) policies.push_back(std::move(pi));
  }
  return policies;
}

std::vector<Measure> constraint_points(const FiniteMdp& mdp, const Measure& rho_star,
                                       int n_samples, SplitMix64Rng rng) {
  std::vector<Measure> points;
  points.reserve(static_cast<std::size_t>(n_samples) + mdp.n_states + 1);
  for (int s = 0; s < mdp.n_states; ++s) points.push_back(Measure::dirac(s, mdp.n_states));
  points.push_back(rho_star);
  for (int i = 0; i < n_samples; ++i) points.push_back(Measure(rng.next_simplex_point(mdp.n_states)));
  return points;
}

}  // namespace

FsdsdCertificate synthesize_storage(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                    const ValueSolution& solution, const SteadyState& steady,
                                    const Dissimilarity& dissim, const SynthesisConfig& config) {
  if (config.n_samples < 1) throw std::invalid_argument("synthesize_storage: n_samples must be >= 1");
  const int n = mdp.n_states;
  const Measure& rho_star = steady.rho_star;
  const ValueFunctional v_star =
      make_value_functional(mdp, functional, solution, config.rollout_tol);

  VariableLayout layout{n, config.use_quadratic};
  const SplitMix64Rng root(config.seed);
  bool all_policies = true;
  const auto policies = synthesis_policy_set(mdp, config, all_policies, root.split(1));
  const auto points = constraint_points(mdp, rho_star, config.n_samples, root.split(2));

  // Soft rows: for every (rho, pi), residuals (8a) and (8b) as linear
  // functions of (w, M, c). The storage enters through
  // g(rho) = w.rho + rho^T M rho, with lambda = g(rho) - g(rho*).
  const long n_rows = 2L * static_cast<long>(points.size()) * static_cast<long>(policies.size());
  Matrix soft_A(n_rows, layout.total());
  Vector soft_b(n_rows);
  const Vector quad_star = quad_monomials(layout, rho_star.weights());
  double scale = 1.0;
  long row = 0;
  for (const auto& pi : policies) {
    for (const auto& point : points) {
      const Measure next = apply_transition(mdp, pi, point);
      const double stage = functional.eval(point, pi);
      const double v_next = v_star(next);
      const double d = dissim.eval(point, rho_star);
      scale = std::max({scale, std::abs(stage), std::abs(v_next)});

      const Vector& r = point.weights();
      const Vector& rn = next.weights();

      soft_A.row(row).setZero();
      soft_A.row(row).head(n) =
          (r - mdp.gamma * rn - (1.0 - mdp.gamma) * rho_star.weights()).transpose();
      if (layout.quadratic)
        soft_A.row(row).segment(n, layout.n_quad()) =
            (quad_monomials(layout, r) - mdp.gamma * quad_monomials(layout, rn) -
             (1.0 - mdp.gamma) * quad_star)
                .transpose();
      soft_A(row, layout.c_index()) = -d;
      soft_b[row] = -stage;
      ++row;

      soft_A.row(row).setZero();
      soft_A.row(row).head(n) = (r - rn).transpose();
      if (layout.quadratic)
        soft_A.row(row).segment(n, layout.n_quad()) =
            (quad_monomials(layout, r) - quad_monomials(layout, rn)).transpose();
      soft_A(row, layout.c_index()) = -d;
      soft_b[row] = -(stage + (mdp.gamma - 1.0) * v_next);
      ++row;
    }
  }

  // Hard rows: c >= c_min plus box bounds on every variable (the boxes also
  // give the dual full row rank).
  const double box = 1e3 * scale;
  const int n_hard = 1 + 2 * layout.total();
  Matrix hard_A = Matrix::Zero(n_hard, layout.total());
  Vector hard_b(n_hard);
  hard_A(0, layout.c_index()) = 1.0;
  hard_b[0] = config.c_min;
  for (int j = 0; j < layout.total(); ++j) {
    hard_A(1 + 2 * j, j) = 1.0;
    hard_b[1 + 2 * j] = -box;
    hard_A(2 + 2 * j, j) = -1.0;
    hard_b[2 + 2 * j] = -box;
  }

  const auto lp_result = lp::max_min_slack(soft_A, soft_b, hard_A, hard_b);
  if (lp_result.status != lp::Status::Optimal)
    throw NumericalError("synthesize_storage: synthesis LP did not reach optimality");

  Vector w = lp_result.z.head(n);
  Matrix M = layout.quadratic ? quad_matrix_from_vars(layout, lp_result.z) : Matrix::Zero(n, n);
  StorageFunctional storage = StorageFunctional::quadratic(std::move(w), std::move(M), rho_star);
  ClassKInfty alpha{std::max(lp_result.z[layout.c_index()], config.c_min), 1.0};

  FsdsdCertificate cert{storage, alpha};
  cert.dissimilarity = dissim.kind();
  cert.manifest.seed = config.seed;
  cert.manifest.n_samples = config.n_samples;
  cert.manifest.n_constraint_points = static_cast<int>(points.size());
  cert.manifest.n_policies = static_cast<int>(policies.size());
  cert.manifest.all_policies = all_policies;
  cert.manifest.n_audit_samples = 10 * config.n_samples;

  // The margin is recomputed through fsdsd_residuals rather than read off the
  // LP, so any sign or indexing slip in the row construction would surface.
  auto audit = [&](const std::vector<Measure>& audit_points, WorstPoint& worst) {
    double min_residual = std::numeric_limits<double>::infinity();
    for (const auto& pi : policies) {
      for (const auto& point : audit_points) {
        const FsdsdResiduals res = fsdsd_residuals(mdp, functional, storage, alpha, v_star, dissim,
                                                   rho_star, point, pi);
        if (res.min() < min_residual) {
          min_residual = res.min();
          worst = WorstPoint{point.weights(), pi, res.r_a, res.r_b};
        }
      }
    }
    return min_residual;
  };

  WorstPoint worst_synthesis;
  double margin = audit(points, worst_synthesis);
  // The row at (rho*, steady.policy) is identically zero up to the stationary
  // residual, so a certified margin lands within noise of zero; snap it.
  if (margin >= -1e-9 && margin < 0.0) margin = 0.0;
  cert.margin = margin;

  if (margin < 0.0) {
    cert.status = CertificateStatus::NotCertified;
    cert.worst = worst_synthesis;
    cert.audit_min_residual = margin;
    return cert;
  }

  const auto audit_points =
      constraint_points(mdp, rho_star, cert.manifest.n_audit_samples, root.split(3));
  WorstPoint worst_audit;
  cert.audit_min_residual = audit(audit_points, worst_audit);
  if (cert.audit_min_residual >= -1e-9) {
    cert.status = CertificateStatus::Certified;
  } else {
    cert.status = CertificateStatus::Inconclusive;
    cert.worst = worst_audit;
  }
  return cert;
}

Theorem1Report check_theorem1(const FiniteMdp& mdp, const StageCostFunctional& functional,
                              const StorageFunctional& storage, int n_test, std::uint64_t seed,
                              double value_tol, double rollout_tol, std::size_t policy_cap) {
  const auto policies = enumerate_policies(mdp.n_states, mdp.n_actions, policy_cap);
  const auto rotated = [&](const Measure& rho, const DeterministicPolicy& pi) {
    return rotated_cost(functional, storage, mdp, rho, pi);
  };

  Theorem1Report report;
  SplitMix64Rng rng = SplitMix64Rng(seed).split(7);
  for (int trial = 0; trial < n_test; ++trial) {
    const Measure rho0(rng.next_simplex_point(mdp.n_states));
    const double lambda0 = storage.eval(rho0);

    double best_rotated = std::numeric_limits<double>::infinity();
    double best_original = std::numeric_limits<double>::infinity();
    std::size_t argmin_rotated = 0, argmin_original = 0;
    for (std::size_t i = 0; i < policies.size(); ++i) {
      const double rot = discounted_rollout(mdp, rotated, policies[i], rho0, rollout_tol).value;
      const double orig =
          nonlinear_rollout_value(mdp, functional, policies[i], rho0, rollout_tol).value;
      report.max_telescoping_gap =
          std::max(report.max_telescoping_gap, std::abs(rot - orig - lambda0));
      if (rot < best_rotated) {
        best_rotated = rot;
        argmin_rotated = i;
      }
      if (orig < best_original) {
        best_original = orig;
        argmin_original = i;
      }
    }

    ++report.n_tested;
    if (argmin_rotated != argmin_original) ++report.policy_violations;
    const double gap = std::abs(best_rotated - (best_original + lambda0));
    report.max_value_gap = std::max(report.max_value_gap, gap);
    if (gap > value_tol) ++report.value_violations;
  }
  return report;
}

MeasureTrajectory simulate_measure_trajectory(const FiniteMdp& mdp,
                                              const DeterministicPolicy& policy,
                                              const Measure& rho0, int steps,
                                              const Dissimilarity& dissim,
                                              const Measure& rho_star,
                                              const ValueFunctional& v_star,
                                              const StorageFunctional& storage) {
  MeasureTrajectory traj;
  traj.measures.reserve(static_cast<std::size_t>(steps) + 1);
  Measure rho = rho0;
  for (int k = 0; k <= steps; ++k) {
    traj.dissimilarities.push_back(dissim.eval(rho, rho_star));
    traj.lyapunov.push_back(rotated_value(v_star, storage, rho));
    traj.measures.push_back(rho);
    if (k < steps) rho = apply_transition(mdp, policy, rho);
  }
  return traj;
}

LyapunovReport check_lyapunov(const FiniteMdp& mdp, const StageCostFunctional& functional,
                              const StorageFunctional& storage, const ClassKInfty& alpha,
                              const ValueFunctional& v_star, const DeterministicPolicy& pi_star,
                              const SteadyState& steady, const Dissimilarity& dissim,
                              const TrajectoryConfig& config, double alpha1_p,
                              double descent_tol) {
  (void)functional;
  LyapunovReport report;
  report.alpha1.p = alpha1_p;
  report.alpha1.c = 0.0;

  SplitMix64Rng rng = SplitMix64Rng(config.seed).split(11);
  double envelope = 0.0;
  bool envelope_finite = true;

  for (int i = 0; i < config.n_rho0; ++i) {
    const Measure rho0(rng.next_simplex_point(mdp.n_states));
    const auto traj = simulate_measure_trajectory(mdp, pi_star, rho0, config.horizon, dissim,
                                                  steady.rho_star, v_star, storage);
    const std::size_t len = traj.measures.size();
    for (std::size_t k = 0; k < len; ++k) {
      const double d = traj.dissimilarities[k];
      const double vbar = traj.lyapunov[k];
      if (vbar < alpha.eval(d) - descent_tol) ++report.lower_bound_violations;
      if (d > 1e-12) {
        envelope = std::max(envelope, vbar / std::pow(d, alpha1_p));
      } else if (vbar > 1e-9) {
        envelope_finite = false;  // positive Vbar at D = 0: no finite upper envelope
      }
      if (k + 1 < len) {
        const double decrease = traj.lyapunov[k + 1] - vbar + alpha.eval(d);
        report.max_descent_excess = std::max(report.max_descent_excess, decrease);
        if (decrease > descent_tol) ++report.descent_violations;
      }
    }
    report.max_final_dissimilarity =
        std::max(report.max_final_dissimilarity, traj.dissimilarities[len - 1]);
  }

  report.assumption2_ok = envelope_finite;
  report.alpha1.c = std::max(envelope, 1e-12);
  return report;
}

DStabilityReport check_d_stability(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                                   const SteadyState& steady, const Dissimilarity& dissim,
                                   const std::vector<double>& eps_grid,
                                   const DStabilityConfig& config) {
  DStabilityReport report;
  const Measure& rho_star = steady.rho_star;
  const int n = mdp.n_states;

  // Starting measures at a controlled dissimilarity: blend a random simplex
  // point toward rho* until D drops under the requested delta.
  auto sample_within = [&](double delta, SplitMix64Rng& rng) {
    const Measure raw(rng.next_simplex_point(n));
    Vector direction = raw.weights() - rho_star.weights();
    double tau = 1.0;
    for (int halvings = 0; halvings < 80; ++halvings) {
      Measure candidate(rho_star.weights() + tau * direction);
      if (dissim.eval(candidate, rho_star) < delta) return candidate;
      tau *= 0.5;
    }
    return rho_star;
  };

  SplitMix64Rng final_rng = SplitMix64Rng(config.seed).split(13);
  for (int i = 0; i < config.n_rho0; ++i) {
    Measure rho(final_rng.next_simplex_point(n));
    for (int k = 0; k < config.horizon; ++k) rho = apply_transition(mdp, policy, rho);
    report.final_dissimilarities.push_back(dissim.eval(rho, rho_star));
  }

  for (const double eps : eps_grid) {
    DStabilityEntry entry;
    entry.eps = eps;
    for (const double factor : config.delta_factors) {
      const double delta = eps * factor;
      SplitMix64Rng rng = SplitMix64Rng(config.seed).split(17 + static_cast<std::uint64_t>(
                                                                    1000.0 * eps * factor));
      bool all_contained = true;
      double max_tail = 0.0;
      for (int i = 0; i < config.n_rho0 && all_contained; ++i) {
        Measure rho = sample_within(delta, rng);
        for (int k = 0; k <= config.horizon; ++k) {
          if (k >= config.settle_k) {
            const double d = dissim.eval(rho, rho_star);
            max_tail = std::max(max_tail, d);
            if (d >= eps) {
              all_contained = false;
              break;
            }
          }
          if (k < config.horizon) rho = apply_transition(mdp, policy, rho);
        }
      }
      if (all_contained) {
        entry.found = true;
        entry.delta = delta;
        entry.max_tail_d = max_tail;
        break;
      }
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace mmdp
