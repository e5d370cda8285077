#pragma once

// Block scores for contiguous ranges of a sorted weighted sample, evaluated
// in constant time from prefix sums.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"

namespace dpem {

enum class ScoreKind {
  kQ1,  // within-block variance
  kQ2,  // within-block standard deviation
  kQ3,  // standard deviation over block sample range
  kQ4,  // (delta + standard deviation) over block sample range
};

/// Which score to minimize. delta is in data units and only read by Q4.
struct ScoringSpec {
  ScoreKind kind = ScoreKind::kQ1;
  double delta = 0.0;

  ScoringSpec() = default;
  ScoringSpec(ScoreKind k, double d = 0.0) : kind(k), delta(d) {
    if (kind == ScoreKind::kQ4 && !(delta > 0.0)) {
      throw InputError("Q4 scoring requires a positive delta");
    }
    if (!(delta >= 0.0)) throw InputError("scoring delta must be nonnegative");
  }

  /// Scores that cannot be evaluated on a single point.
  bool needs_range() const { return kind == ScoreKind::kQ3 || kind == ScoreKind::kQ4; }
};

enum class ScoreStatus {
  kFinite,
  kSingleton,   // Q3/Q4 on a one-point block (zero sample range)
  kZeroWeight,  // block carries no weight
};

struct BlockScore {
  double value = 0.0;
  ScoreStatus status = ScoreStatus::kFinite;

  bool finite() const { return status == ScoreStatus::kFinite; }
};

struct BlockStats {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double range = 0.0;
};

/// Cumulative sums of y, y*d and y*d^2 with d = x - x_0, kept in extended
/// precision. Entry n holds the sums over the first n points.
class PrefixAccumulator {
 public:
  explicit PrefixAccumulator(const WeightedSample& data)
      : xs_(data.xs()), origin_(data.x(0)) {
    const std::size_t n_points = data.size();
    w_.assign(n_points + 1, 0.0L);
    s1_.assign(n_points + 1, 0.0L);
    s2_.assign(n_points + 1, 0.0L);
    for (std::size_t n = 0; n < n_points; ++n) {
      const long double y = data.y(n);
      const long double d = static_cast<long double>(data.x(n)) - origin_;
      w_[n + 1] = w_[n] + y;
      s1_[n + 1] = s1_[n] + y * d;
      s2_[n + 1] = s2_[n] + y * d * d;
    }
  }

  std::size_t size() const { return xs_.size(); }

  /// Cumulative weight entries, length N+1 with a leading zero.
  std::vector<double> cumulative_weight() const { return {w_.begin(), w_.end()}; }

  double block_weight(std::size_t begin, std::size_t end) const {
    return static_cast<double>(w_[end] - w_[begin]);
  }

  /// Statistics of the half-open block [begin, end); weight must be positive
  /// for mean and variance to be meaningful.
  BlockStats stats(std::size_t begin, std::size_t end) const {
    BlockStats out;
    const long double w = w_[end] - w_[begin];
    out.weight = static_cast<double>(w);
    out.range = xs_[end - 1] - xs_[begin];
    if (!(w > 0.0L)) return out;
    if (end - begin == 1) {
      out.mean = xs_[begin];
      return out;
    }
    const long double s1 = s1_[end] - s1_[begin];
    const long double s2 = s2_[end] - s2_[begin];
    const long double shifted_mean = s1 / w;
    long double var = (s2 - s1 * shifted_mean) / w;
    if (var < 0.0L) var = 0.0L;
    out.mean = static_cast<double>(origin_ + shifted_mean);
    out.variance = static_cast<double>(var);
    return out;
  }

 private:
  std::vector<double> xs_;
  long double origin_;
  std::vector<long double> w_;
  std::vector<long double> s1_;
  std::vector<long double> s2_;
};

inline PrefixAccumulator build_prefix_accumulator(const WeightedSample& data) {
  return PrefixAccumulator(data);
}

/// Score of the half-open block [begin, end). Infeasible blocks score +inf
/// with a status telling why.
inline BlockScore block_score(const PrefixAccumulator& acc, std::size_t begin, std::size_t end,
                              const ScoringSpec& spec) {
  const BlockStats s = acc.stats(begin, end);
  if (!(s.weight > 0.0)) return {kInf, ScoreStatus::kZeroWeight};
  switch (spec.kind) {
    case ScoreKind::kQ1:
      return {s.variance, ScoreStatus::kFinite};
    case ScoreKind::kQ2:
      return {std::sqrt(s.variance), ScoreStatus::kFinite};
    case ScoreKind::kQ3:
      if (end - begin == 1) return {kInf, ScoreStatus::kSingleton};
      return {std::sqrt(s.variance) / s.range, ScoreStatus::kFinite};
    case ScoreKind::kQ4:
      if (end - begin == 1) return {kInf, ScoreStatus::kSingleton};
      return {(spec.delta + std::sqrt(s.variance)) / s.range, ScoreStatus::kFinite};
  }
  return {kInf, ScoreStatus::kFinite};
}

}  // namespace dpem
