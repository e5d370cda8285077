#pragma once

// Reference partitions used as baselines for the optimal partition:
// equal weighted quantiles, and agglomerative clustering with complete or
// average linkage.

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"

namespace dpem {

/// Block k ends at the first point whose cumulative weight reaches k*W/K.
/// A boundary that would leave a block empty is advanced by one index.
inline BlockPartition quantile_partition(const WeightedSample& data, std::size_t k) {
  const std::size_t n = data.size();
  if (k == 0) throw InputError("number of blocks must be at least 1");
  if (k > n) {
    throw InfeasibleError("K = " + std::to_string(k) + " exceeds the number of points N = " +
                          std::to_string(n));
  }
  const double total = data.total_weight();
  std::vector<std::size_t> bounds(k + 1, 0);
  bounds[k] = n;
  double cumulative = 0.0;
  std::size_t m = 0;  // points consumed so far
  for (std::size_t b = 1; b < k; ++b) {
    const double threshold = static_cast<double>(b) * total / static_cast<double>(k);
    while (m < n && cumulative < threshold) cumulative += data.y(m++);
    std::size_t boundary = std::max(m, bounds[b - 1] + 1);
    boundary = std::min(boundary, n - (k - b));
    while (m < boundary) cumulative += data.y(m++);
    bounds[b] = boundary;
  }
  return BlockPartition(std::move(bounds), n);
}

enum class Linkage { kComplete, kAverage };

/// Agglomerative clustering of the sorted points down to k clusters.
///
/// In one dimension every cluster stays an interval and the closest pair of
/// clusters is always an adjacent pair, so only adjacent merges are
/// considered. For adjacent intervals A < B the complete linkage is
/// max(B) - min(A) and the weighted average linkage reduces to
/// mean(B) - mean(A). Equal distances merge the leftmost pair first.
inline BlockPartition hierarchical_partition(const WeightedSample& data, std::size_t k,
                                             Linkage linkage) {
  const std::size_t n = data.size();
  if (k == 0) throw InputError("number of blocks must be at least 1");
  if (k > n) {
    throw InfeasibleError("K = " + std::to_string(k) + " exceeds the number of points N = " +
                          std::to_string(n));
  }

  // Clusters are identified by their first index.
  std::vector<std::size_t> end(n), prev(n), next(n);
  std::vector<double> weight(n), weighted_sum(n), plain_sum(n);
  for (std::size_t i = 0; i < n; ++i) {
    end[i] = i + 1;
    prev[i] = i == 0 ? n : i - 1;
    next[i] = i + 1;  // n marks "none"
    weight[i] = data.y(i);
    weighted_sum[i] = data.y(i) * data.x(i);
    plain_sum[i] = data.x(i);
  }

  auto centre = [&](std::size_t c) {
    if (weight[c] > 0.0) return weighted_sum[c] / weight[c];
    return plain_sum[c] / static_cast<double>(end[c] - c);
  };
  auto distance = [&](std::size_t left, std::size_t right) {
    if (linkage == Linkage::kComplete) return data.x(end[right] - 1) - data.x(left);
    return centre(right) - centre(left);
  };

  // (distance, left cluster) for every adjacent pair.
  std::set<std::pair<double, std::size_t>> gaps;
  std::vector<double> gap(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    gap[i] = distance(i, i + 1);
    gaps.emplace(gap[i], i);
  }

  for (std::size_t clusters = n; clusters > k; --clusters) {
    const auto [d, left] = *gaps.begin();
    gaps.erase(gaps.begin());
    const std::size_t right = next[left];
    if (next[right] < n) gaps.erase({gap[right], right});
    if (prev[left] < n) gaps.erase({gap[prev[left]], prev[left]});

    end[left] = end[right];
    weight[left] += weight[right];
    weighted_sum[left] += weighted_sum[right];
    plain_sum[left] += plain_sum[right];
    next[left] = next[right];
    if (next[left] < n) prev[next[left]] = left;

    if (next[left] < n) {
      gap[left] = distance(left, next[left]);
      gaps.emplace(gap[left], left);
    }
    if (prev[left] < n) {
      gap[prev[left]] = distance(prev[left], left);
      gaps.emplace(gap[prev[left]], prev[left]);
    }
  }

  std::vector<std::size_t> bounds;
  bounds.reserve(k + 1);
  for (std::size_t c = 0; c < n; c = next[c]) bounds.push_back(c);
  bounds.push_back(n);
  return BlockPartition(std::move(bounds), n);
}

}  // namespace dpem
