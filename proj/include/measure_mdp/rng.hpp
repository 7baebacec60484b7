#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace mmdp {

// Deterministic, splittable generator built on SplitMix64. Every stochastic
// operation in the toolkit takes an explicit seed and derives substreams with
// split(); outputs are identical across platforms because both the state
// update and all variate transforms are fully specified here (no reliance on
// std::*_distribution).
class SplitMix64Rng {
 public:
  explicit SplitMix64Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Independent substream for a labelled purpose (sampling, audit, ...).
  SplitMix64Rng split(std::uint64_t stream) const {
    SplitMix64Rng mixer(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return SplitMix64Rng(mixer.next_u64());
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive; rejection keeps it exact.
  int next_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % bound);
  }

  double next_exponential() { return -std::log1p(-next_double()); }

  // Dirichlet(1,...,1): uniform over the probability simplex.
  Eigen::VectorXd next_simplex_point(int n) {
    Eigen::VectorXd w(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] = next_exponential();
      total += w[i];
    }
    if (total <= 0.0) {
      w.setConstant(1.0 / n);
      return w;
    }
    return w / total;
  }

  // Inverse-CDF draw from a probability vector (first index whose cumulative
  // weight exceeds u; final positive entry absorbs rounding in the tail).
  int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = next_double();
    double cum = 0.0;
    int last_positive = 0;
    for (int i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
    return last_positive;
  }

 private:
  std::uint64_t state_;
};

// Stable 64-bit content digest (FNV-1a), used for run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace mmdp
