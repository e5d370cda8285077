#pragma once

// Synthetic mixtures with a fixed overlap between neighbouring components,
// and samples drawn from them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"

namespace dpem {

/// Random stream: a 64-bit Mersenne Twister with uniform and normal
/// variates derived by fixed formulas, so streams are identical on every
/// standard library.
///
/// Child streams are seeded with splitmix64 applied to the parent seed
/// combined with the child index; one child per dataset keeps datasets
/// independent of generation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::uint64_t index) const {
    return Rng(splitmix64(seed_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal variate by the Box-Muller transform.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// exp(-|mu_i - mu_j| / (2 sqrt(sigma_i^2 + sigma_j^2)))
inline double overlap(double mu_i, double sigma_i, double mu_j, double sigma_j) {
  return std::exp(-std::abs(mu_i - mu_j) / (2.0 * std::hypot(sigma_i, sigma_j)));
}

/// Distance between means giving overlap `ov` for the two stds.
inline double spacing_from_overlap(double sigma_i, double sigma_j, double ov) {
  if (!(ov > 0.0) || !(ov < 1.0)) throw InputError("overlap must lie in (0, 1)");
  return 2.0 * std::hypot(sigma_i, sigma_j) * std::log(1.0 / ov);
}

enum class WeightsMode { kEqual, kLinear };

struct GroupSpec {
  WeightsMode weights_mode = WeightsMode::kEqual;
  double sigma_low = 0.5;
  double sigma_high = 1.0;
  std::size_t k = 10;
  double ov = 0.1;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw InputError("group needs at least one component");
    if (!(sigma_low > 0.0) || !(sigma_low < sigma_high)) {
      throw InputError("group sigma range must satisfy 0 < low < high");
    }
    if (!(ov > 0.0) || !(ov < 1.0)) throw InputError("overlap must lie in (0, 1)");
    if (n < 1) throw InputError("sample size must be at least 1");
  }

  /// Scenario 1..4: equal or linearly increasing weights, crossed with
  /// std ranges U(0.5, 1) and U(0.05, 1).
  static GroupSpec group(int id, std::size_t k, double ov, std::size_t n, std::uint64_t seed) {
    if (id < 1 || id > 4) throw InputError("group id must be 1..4");
    GroupSpec spec;
    spec.weights_mode = id <= 2 ? WeightsMode::kEqual : WeightsMode::kLinear;
    spec.sigma_low = (id == 1 || id == 3) ? 0.5 : 0.05;
    spec.sigma_high = 1.0;
    spec.k = k;
    spec.ov = ov;
    spec.n = n;
    spec.seed = seed;
    spec.validate();
    return spec;
  }
};

/// Stds uniform in the group range, weights from the group mode, first
/// mean at 0 and every next mean placed at the target overlap.
inline MixtureParams draw_mixture(const GroupSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t k_count = spec.k;
  std::vector<double> weights(k_count), means(k_count), stds(k_count);
  for (std::size_t k = 0; k < k_count; ++k) stds[k] = rng.uniform(spec.sigma_low, spec.sigma_high);
  const double triangle = static_cast<double>(k_count * (k_count + 1) / 2);
  for (std::size_t k = 0; k < k_count; ++k) {
    weights[k] = spec.weights_mode == WeightsMode::kEqual
                     ? 1.0 / static_cast<double>(k_count)
                     : static_cast<double>(k + 1) / triangle;
  }
  means[0] = 0.0;
  for (std::size_t k = 1; k < k_count; ++k) {
    means[k] = means[k - 1] + spacing_from_overlap(stds[k - 1], stds[k], spec.ov);
  }
  return MixtureParams(std::move(weights), std::move(means), std::move(stds));
}

struct LabeledDraws {
  std::vector<std::size_t> labels;
  std::vector<double> values;
};

/// n draws in generation order: a component label from the weights, then a
/// Gaussian value from that component.
inline LabeledDraws draw_labeled(const MixtureParams& params, std::size_t n, Rng& rng) {
  std::vector<double> cumulative(params.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    acc += params.weight(k);
    cumulative[k] = acc;
  }
  LabeledDraws out{std::vector<std::size_t>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t k = 0;
    while (k + 1 < params.size() && u >= cumulative[k]) ++k;
    out.labels[i] = k;
    out.values[i] = params.mean(k) + params.std_dev(k) * rng.normal();
  }
  return out;
}

/// Sorted sample of n draws with exact ties collapsed into counts.
inline WeightedSample sample_mixture(const MixtureParams& params, std::size_t n, Rng& rng) {
  if (n < 1) throw InputError("sample size must be at least 1");
  return WeightedSample::from_observations(draw_labeled(params, n, rng).values);
}

}  // namespace dpem
