#pragma once

#include <string>

#include "measure_mdp/mdp.hpp"

namespace mmdp {

enum class DissimilarityKind { TotalVariation, KullbackLeibler, Wasserstein1 };

std::string to_string(DissimilarityKind kind);
DissimilarityKind dissimilarity_kind_from_string(const std::string& name);

// Dissimilarity D(rho || rho') on the finite simplex: nonnegative and zero on
// the diagonal. TV and W1 are metrics; KL is an asymmetric divergence and is
// exposed as-is.
class Dissimilarity {
 public:
  static Dissimilarity total_variation();
  static Dissimilarity kullback_leibler();
  // `ground_metric` must be symmetric, nonnegative, zero-diagonal and satisfy
  // the triangle inequality (validated here, within 1e-12).
  static Dissimilarity wasserstein1(Matrix ground_metric);
  // Line metric d(i,j) = |i-j|, the common default for W1 demos.
  static Dissimilarity wasserstein1_line(int n);

  DissimilarityKind kind() const { return kind_; }
  const Matrix& ground_metric() const { return ground_metric_; }

  // KL requires absolute continuity (rho(s) > 0 => rho'(s) > 0); a violation
  // is a domain error, never an infinite sentinel.
  double eval(const Measure& rho, const Measure& rho_prime) const;

 private:
  Dissimilarity(DissimilarityKind kind, Matrix metric)
      : kind_(kind), ground_metric_(std::move(metric)) {}

  DissimilarityKind kind_;
  Matrix ground_metric_;  // empty unless kind == Wasserstein1
};

}  // namespace mmdp
