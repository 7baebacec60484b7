#include "measure_mdp/dissimilarity.hpp"

#include <cmath>
#include <sstream>

#include "measure_mdp/lp.hpp"

namespace mmdp {

std::string to_string(DissimilarityKind kind) {
  switch (kind) {
    case DissimilarityKind::TotalVariation: return "tv";
    case DissimilarityKind::KullbackLeibler: return "kl";
    case DissimilarityKind::Wasserstein1: return "w1";
  }
  return "?";
}

DissimilarityKind dissimilarity_kind_from_string(const std::string& name) {
  if (name == "tv") return DissimilarityKind::TotalVariation;
  if (name == "kl") return DissimilarityKind::KullbackLeibler;
  if (name == "w1") return DissimilarityKind::Wasserstein1;
  throw std::invalid_argument("unknown dissimilarity kind: " + name);
}

Dissimilarity Dissimilarity::total_variation() {
  return Dissimilarity(DissimilarityKind::TotalVariation, Matrix());
}

Dissimilarity Dissimilarity::kullback_leibler() {
  return Dissimilarity(DissimilarityKind::KullbackLeibler, Matrix());
}

Dissimilarity Dissimilarity::wasserstein1(Matrix ground_metric) {
  const int n = static_cast<int>(ground_metric.rows());
  if (ground_metric.cols() != n || n == 0)
    throw std::invalid_argument("wasserstein1: ground metric must be square and non-empty");
  for (int i = 0; i < n; ++i) {
    if (std::abs(ground_metric(i, i)) > 1e-12)
      throw std::invalid_argument("wasserstein1: ground metric diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      const double d = ground_metric(i, j);
      if (!std::isfinite(d) || d < 0.0)
        throw std::invalid_argument("wasserstein1: ground metric entries must be finite and >= 0");
      if (std::abs(d - ground_metric(j, i)) > 1e-12)
        throw std::invalid_argument("wasserstein1: ground metric must be symmetric");
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (ground_metric(i, j) > ground_metric(i, k) + ground_metric(k, j) + 1e-12) {
          std::ostringstream msg;
          msg << "wasserstein1: triangle inequality fails at (" << i << "," << j << "," << k << ")";
          throw std::invalid_argument(msg.str());
        }
  return Dissimilarity(DissimilarityKind::Wasserstein1, std::move(ground_metric));
}

Dissimilarity Dissimilarity::wasserstein1_line(int n) {
  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = std::abs(i - j);
  return Dissimilarity(DissimilarityKind::Wasserstein1, std::move(d));
}

double Dissimilarity::eval(const Measure& rho, const Measure& rho_prime) const {
  if (rho.size() != rho_prime.size())
    throw std::invalid_argument("dissimilarity: measures live on different state sets");
  const int n = rho.size();

  switch (kind_) {
    case DissimilarityKind::TotalVariation:
      return 0.5 * (rho.weights() - rho_prime.weights()).lpNorm<1>();

    case DissimilarityKind::KullbackLeibler: {
      double kl = 0.0;
      for (int s = 0; s < n; ++s) {
        const double p = rho[s];
        if (p == 0.0) continue;  // 0 log(0/q) = 0
        const double q = rho_prime[s];
        if (q == 0.0) {
          std::ostringstream msg;
          msg << "KL divergence undefined: rho has mass " << p << " at state " << s
              << " where rho' has none";
          throw std::domain_error(msg.str());
        }
        kl += p * std::log(p / q);
      }
      return std::max(kl, 0.0);
    }

    case DissimilarityKind::Wasserstein1: {
      if (ground_metric_.rows() != n)
        throw std::invalid_argument("wasserstein1: ground metric size mismatch");
      if ((rho.weights() - rho_prime.weights()).lpNorm<1>() == 0.0) return 0.0;
      return lp::transport_cost(ground_metric_, rho.weights(), rho_prime.weights());
    }
  }
  throw std::logic_error("dissimilarity: unreachable");
}

}  // namespace mmdp
