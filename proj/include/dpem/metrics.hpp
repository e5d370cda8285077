#pragma once

// Quality criteria for comparing initialization methods.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"

namespace dpem {

/// Mean over true components of |mu_true - mu_est| / sigma_true *
/// sqrt(N alpha_true), with mu_est the estimated mean closest to mu_true.
inline double d_criterion(const MixtureParams& truth, const MixtureParams& estimate, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double closest = kInf;
    for (double m : estimate.means()) closest = std::min(closest, std::abs(truth.mean(i) - m));
    total += closest / truth.std_dev(i) * std::sqrt(static_cast<double>(n) * truth.weight(i));
  }
  return total / static_cast<double>(truth.size());
}

/// Mean of ln D over datasets; D is floored at 1e-300.
inline double avg_log_d(std::span<const double> ds) {
  if (ds.empty()) throw InputError("avg_log_d needs at least one value");
  double total = 0.0;
  for (double d : ds) total += std::log(std::max(d, 1e-300));
  return total / static_cast<double>(ds.size());
}

/// Method m attains the maximum when L_max - L_m < 5% of (L_max - L_min).
/// With all values equal every method attains.
inline std::vector<bool> attainment(std::span<const double> logliks) {
  if (logliks.empty()) throw InputError("attainment needs at least one value");
  const auto [lo, hi] = std::minmax_element(logliks.begin(), logliks.end());
  const double l_min = *lo;
  const double l_max = *hi;
  const double range = l_max - l_min;
  std::vector<bool> out(logliks.size(), true);
  if (range == 0.0) return out;
  for (std::size_t m = 0; m < logliks.size(); ++m) out[m] = l_max - logliks[m] < 0.05 * range;
  return out;
}

/// Column means of a datasets x methods attainment matrix.
inline std::vector<double> avg_p(const std::vector<std::vector<bool>>& attained) {
  if (attained.empty()) throw InputError("avg_p needs at least one dataset");
  const std::size_t methods = attained.front().size();
  std::vector<double> out(methods, 0.0);
  for (const auto& row : attained) {
    if (row.size() != methods) throw InputError("attainment matrix is not rectangular");
    for (std::size_t m = 0; m < methods; ++m) out[m] += row[m] ? 1.0 : 0.0;
  }
  for (double& p : out) p /= static_cast<double>(attained.size());
  return out;
}

/// Number of free parameters of a K-component univariate mixture.
inline std::size_t free_parameters(std::size_t k) { return 3 * k - 1; }

/// -2 L + (3K - 1) ln(total weight).
inline double bic(double loglik, std::size_t k, double total_weight) {
  if (k < 1) throw InputError("BIC needs K >= 1");
  if (!(total_weight > 1.0)) throw InputError("BIC needs a total weight above 1");
  return -2.0 * loglik + static_cast<double>(free_parameters(k)) * std::log(total_weight);
}

}  // namespace dpem
