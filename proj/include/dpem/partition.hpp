#pragma once

// Globally optimal partition of a sorted sample into K contiguous blocks
// minimizing the summed block score, by the Bellman recursion
//
//   F(k, j) = min_{k-1 <= i < j}  F(k-1, i) + Q([i, j))
//
// where F(k, j) is the best score of splitting the first j points into k
// blocks. Ties keep the smallest i, so backtracking prefers the earliest
// start of each final block.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"
#include "dpem/scoring.hpp"

namespace dpem {

struct PartitionResult {
  BlockPartition partition;
  double score = 0.0;
};

namespace detail {

inline void check_partition_request(std::size_t n_points, std::size_t k, const ScoringSpec& spec) {
  if (k == 0) throw InputError("number of blocks must be at least 1");
  if (k > n_points) {
    throw InfeasibleError("K = " + std::to_string(k) + " exceeds the number of points N = " +
                          std::to_string(n_points));
  }
  if (spec.needs_range() && k > n_points / 2) {
    throw InfeasibleError("K = " + std::to_string(k) +
                          " exceeds floor(N/2) = " + std::to_string(n_points / 2) +
                          "; range-based scores need blocks of at least two points");
  }
}

/// Fills the recursion for 1..k_max blocks. Row k of `from` holds the
/// argmin start index of the last block for every prefix length.
class BellmanTable {
 public:
  BellmanTable(const WeightedSample& data, std::size_t k_max, const ScoringSpec& spec)
      : n_(data.size()), k_max_(k_max), from_(k_max * (data.size() + 1), 0), best_(k_max, kInf) {
    const PrefixAccumulator acc(data);
    std::vector<double> prev(n_ + 1, kInf);
    std::vector<double> curr(n_ + 1, kInf);
    for (std::size_t j = 1; j <= n_; ++j) prev[j] = block_score(acc, 0, j, spec).value;
    best_[0] = prev[n_];
    for (std::size_t k = 2; k <= k_max_; ++k) {
      std::fill(curr.begin(), curr.end(), kInf);
      std::uint32_t* row = &from_[(k - 1) * (n_ + 1)];
      for (std::size_t j = k; j <= n_; ++j) {
        double best = kInf;
        std::size_t arg = k - 1;
        for (std::size_t i = k - 1; i < j; ++i) {
          if (prev[i] == kInf) continue;
          const double candidate = prev[i] + block_score(acc, i, j, spec).value;
          if (candidate < best) {
            best = candidate;
            arg = i;
          }
        }
        curr[j] = best;
        row[j] = static_cast<std::uint32_t>(arg);
      }
      best_[k - 1] = curr[n_];
      std::swap(prev, curr);
    }
  }

  double score(std::size_t k) const { return best_[k - 1]; }

  BlockPartition backtrack(std::size_t k) const {
    std::vector<std::size_t> bounds(k + 1, 0);
    bounds[k] = n_;
    std::size_t j = n_;
    for (std::size_t level = k; level >= 2; --level) {
      j = from_[(level - 1) * (n_ + 1) + j];
      bounds[level - 1] = j;
    }
    return BlockPartition(std::move(bounds), n_);
  }

 private:
  std::size_t n_;
  std::size_t k_max_;
  std::vector<std::uint32_t> from_;
  std::vector<double> best_;
};

}  // namespace detail

/// Optimal partition of `data` into exactly k blocks under `spec`.
inline PartitionResult dp_partition(const WeightedSample& data, std::size_t k,
                                    const ScoringSpec& spec) {
  detail::check_partition_request(data.size(), k, spec);
  const detail::BellmanTable table(data, k, spec);
  const double score = table.score(k);
  if (!std::isfinite(score)) {
    throw InfeasibleError("every partition into K = " + std::to_string(k) +
                          " blocks contains a zero-weight or single-point block");
  }
  return {table.backtrack(k), score};
}

/// Optimal partitions for every K in 1..k_max from one table fill. Entry
/// k-1 is empty when no feasible partition into k blocks exists.
inline std::vector<std::optional<PartitionResult>> dp_partition_all(const WeightedSample& data,
                                                                    std::size_t k_max,
                                                                    const ScoringSpec& spec) {
  if (k_max == 0) throw InputError("number of blocks must be at least 1");
  const std::size_t limit = std::min(k_max, data.size());
  const detail::BellmanTable table(data, limit, spec);
  std::vector<std::optional<PartitionResult>> out(k_max);
  for (std::size_t k = 1; k <= limit; ++k) {
    if (spec.needs_range() && k > data.size() / 2) continue;
    const double score = table.score(k);
    if (std::isfinite(score)) out[k - 1] = PartitionResult{table.backtrack(k), score};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive reference

inline constexpr std::size_t kBruteForceMaxPoints = 20;

/// Block score by a direct two-pass evaluation, independent of the prefix
/// sums used by the recursion.
inline double direct_block_score(const WeightedSample& data, std::size_t begin, std::size_t end,
                                 const ScoringSpec& spec) {
  double w = 0.0;
  for (std::size_t n = begin; n < end; ++n) w += data.y(n);
  if (!(w > 0.0)) return kInf;
  if (spec.needs_range() && end - begin == 1) return kInf;
  double mean = 0.0;
  for (std::size_t n = begin; n < end; ++n) mean += data.y(n) * data.x(n);
  mean /= w;
  double var = 0.0;
  for (std::size_t n = begin; n < end; ++n) {
    const double d = data.x(n) - mean;
    var += data.y(n) * d * d;
  }
  var /= w;
  const double sd = std::sqrt(var);
  const double range = data.x(end - 1) - data.x(begin);
  switch (spec.kind) {
    case ScoreKind::kQ1: return var;
    case ScoreKind::kQ2: return sd;
    case ScoreKind::kQ3: return sd / range;
    case ScoreKind::kQ4: return (spec.delta + sd) / range;
  }
  return kInf;
}

/// Enumerates every placement of the K-1 inner boundaries. Among equal
/// scores keeps the one whose boundaries are smallest when compared from
/// the last inner boundary backwards, matching the recursion's tie-break.
inline PartitionResult brute_force_partition(const WeightedSample& data, std::size_t k,
                                             const ScoringSpec& spec) {
  const std::size_t n = data.size();
  if (n > kBruteForceMaxPoints) {
    throw InputError("brute-force partition refuses N = " + std::to_string(n) + " > " +
                     std::to_string(kBruteForceMaxPoints));
  }
  detail::check_partition_request(n, k, spec);

  std::vector<std::size_t> bounds(k + 1);
  for (std::size_t b = 0; b < k; ++b) bounds[b] = b;
  bounds[k] = n;

  auto later_is_preferred = [k](const std::vector<std::size_t>& cand,
                                const std::vector<std::size_t>& best) {
    for (std::size_t b = k - 1; b >= 1; --b) {
      if (cand[b] != best[b]) return cand[b] < best[b];
    }
    return false;
  };

  std::vector<std::size_t> best_bounds;
  double best_score = kInf;
  while (true) {
    double total = 0.0;
    for (std::size_t b = 0; b < k; ++b) total += direct_block_score(data, bounds[b], bounds[b + 1], spec);
    if (total < best_score || (total == best_score && std::isfinite(total) &&
                               later_is_preferred(bounds, best_bounds))) {
      best_score = total;
      best_bounds = bounds;
    }
    // Next combination of inner boundaries bounds[1..k-1] from {1..n-1}.
    std::size_t b = k - 1;
    while (b >= 1 && bounds[b] == n - k + b) --b;
    if (b == 0) break;
    ++bounds[b];
    for (std::size_t c = b + 1; c < k; ++c) bounds[c] = bounds[c - 1] + 1;
  }
  if (!std::isfinite(best_score)) {
    throw InfeasibleError("every partition into K = " + std::to_string(k) +
                          " blocks contains a zero-weight or single-point block");
  }
  return {BlockPartition(std::move(best_bounds), n), best_score};
}

}  // namespace dpem
