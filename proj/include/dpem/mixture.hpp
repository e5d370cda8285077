#pragma once

// Core value types of univariate Gaussian mixture fitting: mixture
// parameters, weighted (possibly binned) samples, block partitions of a
// sorted sample, and the densities / likelihoods evaluated on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpem/error.hpp"

namespace dpem {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance on the unit sum of mixture weights.
inline constexpr double kWeightSumTolerance = 1e-12;

/// Weights, means and standard deviations of a K-component univariate
/// Gaussian mixture. Always valid once constructed.
class MixtureParams {
 public:
  MixtureParams(std::vector<double> weights, std::vector<double> means,
                std::vector<double> stds)
      : weights_(std::move(weights)), means_(std::move(means)), stds_(std::move(stds)) {
    if (weights_.empty()) throw InputError("mixture must have at least one component");
    if (weights_.size() != means_.size() || weights_.size() != stds_.size()) {
      throw InputError("mixture weights, means and stds differ in length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (!(weights_[k] > 0.0) || !std::isfinite(weights_[k])) {
        throw InputError("mixture weight " + std::to_string(k) + " is not positive");
      }
      if (!(stds_[k] > 0.0) || !std::isfinite(stds_[k])) {
        throw InputError("mixture std " + std::to_string(k) + " is not positive");
      }
      if (!std::isfinite(means_[k])) {
        throw InputError("mixture mean " + std::to_string(k) + " is not finite");
      }
      sum += weights_[k];
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      throw InputError("mixture weights do not sum to 1");
    }
  }

  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }

  double weight(std::size_t k) const { return weights_[k]; }
  double mean(std::size_t k) const { return means_[k]; }
  double std_dev(std::size_t k) const { return stds_[k]; }

  friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

 private:
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

/// Sorted abscissas with nonnegative counts. Unbinned observations are the
/// special case of unit counts; binned data additionally carries the bin
/// width.
class WeightedSample {
 public:
  WeightedSample(std::vector<double> xs, std::vector<double> ys,
                 std::optional<double> bin_width = std::nullopt)
      : xs_(std::move(xs)), ys_(std::move(ys)), bin_width_(bin_width) {
    if (xs_.empty()) throw InputError("sample is empty");
    if (xs_.size() != ys_.size()) throw InputError("sample xs and ys differ in length");
    total_ = 0.0;
    for (std::size_t n = 0; n < xs_.size(); ++n) {
      if (!std::isfinite(xs_[n])) throw InputError("sample abscissa is not finite");
      if (!(ys_[n] >= 0.0) || !std::isfinite(ys_[n])) {
        throw InputError("sample count at index " + std::to_string(n) + " is negative");
      }
      if (n > 0 && !(xs_[n] > xs_[n - 1])) {
        throw InputError("sample abscissas are not strictly increasing at index " +
                         std::to_string(n));
      }
      total_ += ys_[n];
    }
    if (!(total_ > 0.0)) throw InputError("sample has zero total weight");
    if (bin_width_) {
      const double width = *bin_width_;
      if (!(width > 0.0) || !std::isfinite(width)) throw InputError("bin width must be positive");
      for (std::size_t n = 1; n < xs_.size(); ++n) {
        if (std::abs((xs_[n] - xs_[n - 1]) - width) > 1e-9 * width) {
          throw InputError("bin centers are not spaced by the bin width at index " +
                           std::to_string(n));
        }
      }
    }
  }

  /// Builds a sample from raw observations: sorts them and collapses exact
  /// ties into counts.
  static WeightedSample from_observations(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(values.size());
    ys.reserve(values.size());
    for (double v : values) {
      if (!xs.empty() && xs.back() == v) {
        ys.back() += 1.0;
      } else {
        xs.push_back(v);
        ys.push_back(1.0);
      }
    }
    return WeightedSample(std::move(xs), std::move(ys));
  }

  std::size_t size() const { return xs_.size(); }
  double total_weight() const { return total_; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  double x(std::size_t n) const { return xs_[n]; }
  double y(std::size_t n) const { return ys_[n]; }
  std::optional<double> bin_width() const { return bin_width_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::optional<double> bin_width_;
  double total_ = 0.0;
};

/// K contiguous, nonempty, half-open index ranges [b_{k-1}, b_k) covering
/// 0..N. Stores the K+1 boundaries.
class BlockPartition {
 public:
  BlockPartition(std::vector<std::size_t> boundaries, std::size_t n)
      : boundaries_(std::move(boundaries)) {
    if (boundaries_.size() < 2) throw InputError("partition needs at least one block");
    if (boundaries_.front() != 0 || boundaries_.back() != n) {
      throw InputError("partition does not cover the sample");
    }
    for (std::size_t k = 1; k < boundaries_.size(); ++k) {
      if (boundaries_[k] <= boundaries_[k - 1]) {
        throw InputError("partition has an empty block");
      }
    }
  }

  std::size_t size() const { return boundaries_.size() - 1; }
  std::size_t points() const { return boundaries_.back(); }
  std::size_t begin(std::size_t k) const { return boundaries_[k]; }
  std::size_t end(std::size_t k) const { return boundaries_[k + 1]; }
  const std::vector<std::size_t>& boundaries() const { return boundaries_; }

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;

 private:
  std::vector<std::size_t> boundaries_;
};

enum class ClampKind {
  kSigmaFloor,      // std raised to sigma_min
  kAlphaFloor,      // weight raised to alpha_min before renormalization
  kEmptyComponent,  // zero responsibility mass
  kNumericRescue,   // all component densities underflowed for a point
};

inline const char* to_string(ClampKind kind) {
  switch (kind) {
    case ClampKind::kSigmaFloor: return "sigma_floor";
    case ClampKind::kAlphaFloor: return "alpha_floor";
    case ClampKind::kEmptyComponent: return "empty_component";
    case ClampKind::kNumericRescue: return "numeric_rescue";
  }
  return "unknown";
}

struct ClampEvent {
  std::size_t iteration = 0;
  std::size_t component = 0;
  ClampKind kind = ClampKind::kSigmaFloor;

  friend bool operator==(const ClampEvent&, const ClampEvent&) = default;
};

/// Outcome of an EM run. loglik_trace[0] is the log-likelihood of the
/// initial parameters and loglik_trace[t] the one after iteration t.
struct FitResult {
  MixtureParams params;
  std::vector<double> loglik_trace;
  std::size_t iterations = 0;
  std::vector<ClampEvent> clamp_events;
  bool converged = false;

  double loglik() const { return loglik_trace.back(); }
};

// ---------------------------------------------------------------------------
// Densities and likelihoods

inline double log_normal_pdf(double x, double mean, double sd) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

inline double normal_pdf(double x, double mean, double sd) {
  return std::exp(log_normal_pdf(x, mean, sd));
}

/// Gaussian probability mass of [lo, hi], evaluated on whichever tail keeps
/// the difference free of cancellation.
inline double normal_interval_probability(double lo, double hi, double mean, double sd) {
  const double a = (lo - mean) / (sd * std::numbers::sqrt2);
  const double b = (hi - mean) / (sd * std::numbers::sqrt2);
  if (a >= 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
  if (b <= 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
  return 0.5 * (std::erf(b) - std::erf(a));
}

/// log f^mix(x) by log-sum-exp over the components.
inline double log_mixture_pdf(double x, const MixtureParams& params) {
  double best = kNegInf;
  const std::size_t k_count = params.size();
  // Small fixed buffer avoids an allocation per point for typical K.
  double stack_terms[16];
  std::vector<double> heap_terms;
  double* terms = stack_terms;
  if (k_count > 16) {
    heap_terms.resize(k_count);
    terms = heap_terms.data();
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    terms[k] = std::log(params.weight(k)) + log_normal_pdf(x, params.mean(k), params.std_dev(k));
    best = std::max(best, terms[k]);
  }
  if (!std::isfinite(best)) return kNegInf;
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) sum += std::exp(terms[k] - best);
  return best + std::log(sum);
}

inline double mixture_pdf(double x, const MixtureParams& params) {
  double density = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    density += params.weight(k) * normal_pdf(x, params.mean(k), params.std_dev(k));
  }
  return density;
}

/// Sum over points of y_n log f^mix(x_n). Returns -infinity if the mixture
/// density of any positively weighted point vanishes.
inline double log_likelihood(const WeightedSample& data, const MixtureParams& params) {
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (data.y(n) == 0.0) continue;
    const double lp = log_mixture_pdf(data.x(n), params);
    if (!std::isfinite(lp)) return kNegInf;
    total += data.y(n) * lp;
  }
  return total;
}

/// Multinomial log-likelihood with bin probabilities given by Gaussian CDF
/// differences over each bin. Requires a binned sample.
inline double exact_binned_log_likelihood(const WeightedSample& data, const MixtureParams& params) {
  if (!data.bin_width()) throw InputError("exact binned likelihood requires a bin width");
  const double half = 0.5 * *data.bin_width();
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (data.y(n) == 0.0) continue;
    double p = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      p += params.weight(k) * normal_interval_probability(data.x(n) - half, data.x(n) + half,
                                                          params.mean(k), params.std_dev(k));
    }
    if (!(p > 0.0)) return kNegInf;
    total += data.y(n) * std::log(p);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Partition to initial parameters

/// Weighted mean, standard deviation and weight fraction of every block.
/// Standard deviations are floored at sigma_min.
inline MixtureParams blocks_to_params(const WeightedSample& data, const BlockPartition& partition,
                                      double sigma_min) {
  if (partition.points() != data.size()) {
    throw InvalidPartitionError("partition size does not match the sample");
  }
  const std::size_t k_count = partition.size();
  std::vector<double> weights(k_count), means(k_count), stds(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::size_t lo = partition.begin(k);
    const std::size_t hi = partition.end(k);
    double w = 0.0;
    for (std::size_t n = lo; n < hi; ++n) w += data.y(n);
    if (!(w > 0.0)) {
      throw InvalidPartitionError("block " + std::to_string(k) + " has zero total weight");
    }
    // Shift by the leading abscissa so large offsets do not cost precision.
    const double origin = data.x(lo);
    double s1 = 0.0;
    for (std::size_t n = lo; n < hi; ++n) s1 += data.y(n) * (data.x(n) - origin);
    const double shifted_mean = s1 / w;
    double s2 = 0.0;
    for (std::size_t n = lo; n < hi; ++n) {
      const double d = data.x(n) - origin - shifted_mean;
      s2 += data.y(n) * d * d;
    }
    weights[k] = w / data.total_weight();
    means[k] = origin + shifted_mean;
    stds[k] = std::max(std::sqrt(s2 / w), sigma_min);
  }
  // Block weights add up to the total only up to rounding.
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return MixtureParams(std::move(weights), std::move(means), std::move(stds));
}

}  // namespace dpem
