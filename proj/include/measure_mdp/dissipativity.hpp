#pragma once

#include <optional>

#include "measure_mdp/dissimilarity.hpp"
#include "measure_mdp/functionals.hpp"

namespace mmdp {

// Storage functional lambda[rho] = w.rho + rho^T M rho - normalization,
// normalized so that lambda[rho*] = 0.
class StorageFunctional {
 public:
  StorageFunctional(Vector w, Matrix M, double normalization);

  static StorageFunctional zero(int n);
  static StorageFunctional affine(Vector w, const Measure& rho_star);
  static StorageFunctional quadratic(Vector w, Matrix M, const Measure& rho_star);

  double eval(const Measure& rho) const;

  const Vector& linear_weights() const { return w_; }
  const Matrix& quadratic_weights() const { return M_; }
  double normalization() const { return normalization_; }
  bool is_affine() const { return affine_; }
  int size() const { return static_cast<int>(w_.size()); }

 private:
  Vector w_;
  Matrix M_;
  double normalization_ = 0.0;
  bool affine_ = true;
};

inline double eval_storage(const StorageFunctional& storage, const Measure& rho) {
  return storage.eval(rho);
}

// alpha(x) = c * x^p with c > 0, p >= 1 (class K-infinity on the bounded
// dissimilarity range).
struct ClassKInfty {
  double c = 1.0;
  double p = 1.0;

  double eval(double x) const;
};

// Rotated stage cost: L[rho,pi] - gamma lambda[T_pi rho] + lambda[rho].
double rotated_cost(const StageCostFunctional& functional, const StorageFunctional& storage,
                    const FiniteMdp& mdp, const Measure& rho, const DeterministicPolicy& policy);

// Rotated value: V*[rho] + lambda[rho].
double rotated_value(const ValueFunctional& v_star, const StorageFunctional& storage,
                     const Measure& rho);

struct FsdsdResiduals {
  double r_a = 0.0;
  double r_b = 0.0;

  double min() const { return r_a < r_b ? r_a : r_b; }
};

// Slack of the two dissipation inequalities at one (rho, pi); both
// nonnegative means the conditions hold there.
FsdsdResiduals fsdsd_residuals(const FiniteMdp& mdp, const StageCostFunctional& functional,
                               const StorageFunctional& storage, const ClassKInfty& alpha,
                               const ValueFunctional& v_star, const Dissimilarity& dissim,
                               const Measure& rho_star, const Measure& rho,
                               const DeterministicPolicy& policy);

enum class CertificateStatus { Certified, NotCertified, Inconclusive };

std::string to_string(CertificateStatus status);
CertificateStatus certificate_status_from_string(const std::string& name);

struct WorstPoint {
  Vector rho;
  DeterministicPolicy policy;
  double r_a = 0.0;
  double r_b = 0.0;
};

struct SampleManifest {
  std::uint64_t seed = 0;
  int n_samples = 0;            // interior samples in the synthesis set
  int n_constraint_points = 0;  // interior + vertices + rho*
  int n_policies = 0;
  bool all_policies = true;
  int n_audit_samples = 0;      // interior samples in the fresh audit set
};

struct FsdsdCertificate {
  StorageFunctional storage;
  ClassKInfty alpha;
  double margin = 0.0;          // min residual over the synthesis set
  double audit_min_residual = 0.0;
  DissimilarityKind dissimilarity = DissimilarityKind::TotalVariation;
  SampleManifest manifest;
  CertificateStatus status = CertificateStatus::NotCertified;
  std::optional<WorstPoint> worst;
};

struct SynthesisConfig {
  int n_samples = 1000;
  std::uint64_t seed = 0;
  std::size_t policy_cap = 256;
  bool use_quadratic = false;
  double c_min = 1e-6;        // floor on alpha's slope; bars the alpha == 0 "certificate"
  double rollout_tol = 1e-9;  // V* rollouts for nonlinear stage costs
};

// Fits (w, M, c) by a max-min-slack LP over sampled measures (simplex
// vertices + rho* + Dirichlet interior points) crossed with the policy set,
// then re-audits a fresh 10x sample. Certified means the audited FSDSD
// inequalities all hold; the quantifier over the whole simplex is sampled,
// not eliminated.
FsdsdCertificate synthesize_storage(const FiniteMdp& mdp, const StageCostFunctional& functional,
                                    const ValueSolution& solution, const SteadyState& steady,
                                    const Dissimilarity& dissim, const SynthesisConfig& config);

struct Theorem1Report {
  int n_tested = 0;
  int policy_violations = 0;
  int value_violations = 0;
  double max_value_gap = 0.0;        // |min rotated rollout - (V*[rho0] + lambda[rho0])|
  double max_telescoping_gap = 0.0;  // max over pi of |rotated - original - lambda[rho0]|
  bool passed() const { return policy_violations == 0 && value_violations == 0; }
};

// Verifies, on n_test sampled rho0, that the rotated OCP has the same argmin
// policy as the original one and that its value is V*[rho0] + lambda[rho0];
// both argmins are taken by full policy enumeration.
Theorem1Report check_theorem1(const FiniteMdp& mdp, const StageCostFunctional& functional,
                              const StorageFunctional& storage, int n_test, std::uint64_t seed,
                              double value_tol = 1e-7, double rollout_tol = 1e-9,
                              std::size_t policy_cap = kDefaultPolicyCap);

struct MeasureTrajectory {
  std::vector<Measure> measures;
  std::vector<double> dissimilarities;  // D(rho_k || rho*)
  std::vector<double> lyapunov;         // Vbar*[rho_k]
};

MeasureTrajectory simulate_measure_trajectory(const FiniteMdp& mdp,
                                              const DeterministicPolicy& policy,
                                              const Measure& rho0, int steps,
                                              const Dissimilarity& dissim,
                                              const Measure& rho_star,
                                              const ValueFunctional& v_star,
                                              const StorageFunctional& storage);

struct TrajectoryConfig {
  int n_rho0 = 20;
  int horizon = 200;
  std::uint64_t seed = 0;
};

struct LyapunovReport {
  bool assumption2_ok = true;
  ClassKInfty alpha1;                   // fitted envelope Vbar <= c1 * D^p
  int lower_bound_violations = 0;       // alpha(D) <= Vbar failures
  int descent_violations = 0;
  double max_descent_excess = 0.0;      // max of Vbar_{k+1} - Vbar_k + alpha(D_k)
  double max_final_dissimilarity = 0.0; // max over trajectories of D at the horizon
  bool passed() const {
    return assumption2_ok && lower_bound_violations == 0 && descent_violations == 0;
  }
};

// Simulates closed-loop measure trajectories under pi_star and checks the
// Lyapunov sandwich and per-step descent of Vbar* = V* + lambda.
LyapunovReport check_lyapunov(const FiniteMdp& mdp, const StageCostFunctional& functional,
                              const StorageFunctional& storage, const ClassKInfty& alpha,
                              const ValueFunctional& v_star, const DeterministicPolicy& pi_star,
                              const SteadyState& steady, const Dissimilarity& dissim,
                              const TrajectoryConfig& config, double alpha1_p = 1.0,
                              double descent_tol = 1e-9);

struct DStabilityEntry {
  double eps = 0.0;
  double delta = 0.0;   // largest accepted candidate, 0 when none passed
  bool found = false;
  double max_tail_d = 0.0;
};

struct DStabilityReport {
  std::vector<DStabilityEntry> entries;
  std::vector<double> final_dissimilarities;  // per sampled rho0, D at the horizon
};

struct DStabilityConfig {
  std::vector<double> delta_factors = {1.0, 0.5, 0.25, 0.1, 0.05, 0.01};
  int n_rho0 = 20;
  int settle_k = 50;   // the K of the definition: check D < eps for k >= K
  int horizon = 200;
  std::uint64_t seed = 0;
};

// Empirical (eps, delta) audit of Definition-2 stability around rho*.
DStabilityReport check_d_stability(const FiniteMdp& mdp, const DeterministicPolicy& policy,
                                   const SteadyState& steady, const Dissimilarity& dissim,
                                   const std::vector<double>& eps_grid,
                                   const DStabilityConfig& config);

}  // namespace mmdp
