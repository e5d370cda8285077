#pragma once

// EM iterations for univariate Gaussian mixtures on weighted samples, with
// floors on component standard deviations and weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpem/error.hpp"
#include "dpem/mixture.hpp"

namespace dpem {

struct EmConfig {
  double sigma_min = 1e-2;
  double alpha_min = 1e-4;
  std::size_t max_iters = 5000;
  double rel_tol = 1e-8;

  /// Floors used for simulated data.
  static EmConfig simulation() { return {1e-2, 1e-4, 5000, 1e-8}; }
  /// Floors used for 1 Da binned mass spectra.
  static EmConfig spectra() { return {1.0, 1e-5, 5000, 1e-8}; }

  void validate(std::size_t k) const {
    if (!(sigma_min > 0.0)) throw InputError("sigma_min must be positive");
    if (!(alpha_min > 0.0) || !(alpha_min * static_cast<double>(k) < 1.0)) {
      throw InputError("alpha_min must lie in (0, 1/K)");
    }
    if (max_iters < 1) throw InputError("max_iters must be at least 1");
    if (!(rel_tol > 0.0)) throw InputError("rel_tol must be positive");
  }
};

/// Thrown when the likelihood of an iterate is no longer finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, MixtureParams last_valid)
      : Error(what), last_valid_(std::move(last_valid)) {}
  const MixtureParams& last_valid() const { return last_valid_; }

 private:
  MixtureParams last_valid_;
};

/// N x K matrix of posterior component probabilities, row-major.
class Responsibilities {
 public:
  Responsibilities(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), p_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t n) { return {p_.data() + n * cols_, cols_}; }
  std::span<const double> row(std::size_t n) const { return {p_.data() + n * cols_, cols_}; }
  double operator()(std::size_t n, std::size_t k) const { return p_[n * cols_ + k]; }

  /// Points whose every component density underflowed; each was assigned
  /// to its nearest component in standardized distance.
  const std::vector<std::size_t>& rescued_rows() const { return rescued_; }
  void mark_rescued(std::size_t n) { rescued_.push_back(n); }

  /// Sum over points of y_n log f^mix(x_n) for the parameters the matrix
  /// was computed from; -infinity when any row needed a rescue.
  double loglik = 0.0;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> p_;
  std::vector<std::size_t> rescued_;
};

/// Posterior component probabilities by log-sum-exp.
inline Responsibilities e_step(const WeightedSample& data, const MixtureParams& params) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  const std::size_t n_points = data.size();
  const std::size_t k_count = params.size();
  std::vector<double> offset(k_count), inv_sd(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    offset[k] = std::log(params.weight(k)) - std::log(params.std_dev(k)) - kLogSqrt2Pi;
    inv_sd[k] = 1.0 / params.std_dev(k);
  }

  Responsibilities resp(n_points, k_count);
  double loglik = 0.0;
  for (std::size_t n = 0; n < n_points; ++n) {
    const double x = data.x(n);
    std::span<double> row = resp.row(n);
    double best = kNegInf;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double z = (x - params.mean(k)) * inv_sd[k];
      row[k] = offset[k] - 0.5 * z * z;
      best = std::max(best, row[k]);
    }
    if (!std::isfinite(best)) {
      std::size_t nearest = 0;
      double nearest_z = kInf;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double z = std::abs(x - params.mean(k)) * inv_sd[k];
        if (z < nearest_z) {
          nearest_z = z;
          nearest = k;
        }
      }
      std::fill(row.begin(), row.end(), 0.0);
      row[nearest] = 1.0;
      resp.mark_rescued(n);
      if (data.y(n) > 0.0) loglik = kNegInf;
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      row[k] = std::exp(row[k] - best);
      sum += row[k];
    }
    const double inv = 1.0 / sum;
    for (std::size_t k = 0; k < k_count; ++k) row[k] *= inv;
    if (data.y(n) > 0.0) loglik += data.y(n) * (best + std::log(sum));
  }
  resp.loglik = loglik;
  return resp;
}

struct MStepResult {
  MixtureParams params;
  std::vector<ClampEvent> events;  // iteration field left at 0
};

/// Weighted parameter updates followed by the sigma and alpha floors and a
/// renormalization of the weights. A component without responsibility mass
/// keeps its previous mean.
inline MStepResult m_step(const WeightedSample& data, const Responsibilities& resp,
                          const EmConfig& config, const MixtureParams& previous) {
  const std::size_t n_points = data.size();
  const std::size_t k_count = resp.cols();
  if (resp.rows() != n_points || previous.size() != k_count) {
    throw InputError("responsibilities do not match the sample or the parameters");
  }
  const double origin = data.x(0);
  std::vector<double> mass(k_count, 0.0), first(k_count, 0.0), second(k_count, 0.0);
  for (std::size_t n = 0; n < n_points; ++n) {
    const double y = data.y(n);
    if (y == 0.0) continue;
    const double d = data.x(n) - origin;
    const std::span<const double> row = resp.row(n);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double yr = y * row[k];
      mass[k] += yr;
      first[k] += yr * d;
    }
  }
  std::vector<double> shifted_mean(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (mass[k] > 0.0) shifted_mean[k] = first[k] / mass[k];
  }
  for (std::size_t n = 0; n < n_points; ++n) {
    const double y = data.y(n);
    if (y == 0.0) continue;
    const double d = data.x(n) - origin;
    const std::span<const double> row = resp.row(n);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double e = d - shifted_mean[k];
      second[k] += y * row[k] * e * e;
    }
  }

  MStepResult out{previous, {}};
  std::vector<double> weights(k_count), means(k_count), stds(k_count);
  const double total = data.total_weight();
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!(mass[k] > 0.0)) {
      weights[k] = config.alpha_min;
      means[k] = previous.mean(k);
      stds[k] = config.sigma_min;
      out.events.push_back({0, k, ClampKind::kEmptyComponent});
      continue;
    }
    weights[k] = mass[k] / total;
    means[k] = origin + shifted_mean[k];
    stds[k] = std::sqrt(second[k] / mass[k]);
    if (stds[k] < config.sigma_min) {
      stds[k] = config.sigma_min;
      out.events.push_back({0, k, ClampKind::kSigmaFloor});
    }
    if (weights[k] < config.alpha_min) {
      weights[k] = config.alpha_min;
      out.events.push_back({0, k, ClampKind::kAlphaFloor});
    }
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  out.params = MixtureParams(std::move(weights), std::move(means), std::move(stds));
  return out;
}

/// Optional callbacks invoked with the iteration number after every E-step
/// (iteration 0 is the initial one) and every M-step.
struct EmHooks {
  std::function<void(std::size_t, const Responsibilities&)> after_e_step;
  std::function<void(std::size_t, const MixtureParams&)> after_m_step;
};

/// Runs EM from `init` until the relative change of the log-likelihood
/// drops to rel_tol or max_iters iterations have been made.
inline FitResult run_em(const WeightedSample& data, const MixtureParams& init,
                        const EmConfig& config, const EmHooks& hooks = {}) {
  config.validate(init.size());
  FitResult result{init, {}, 0, {}, false};
  Responsibilities resp = e_step(data, init);
  if (hooks.after_e_step) hooks.after_e_step(0, resp);
  if (!std::isfinite(resp.loglik)) {
    throw DivergenceError("log-likelihood of the initial parameters is not finite", init);
  }
  result.loglik_trace.push_back(resp.loglik);
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    MStepResult step = m_step(data, resp, config, result.params);
    if (hooks.after_m_step) hooks.after_m_step(iter, step.params);
    Responsibilities next = e_step(data, step.params);
    if (hooks.after_e_step) hooks.after_e_step(iter, next);
    if (!std::isfinite(next.loglik)) {
      throw DivergenceError("log-likelihood became non-finite at iteration " + std::to_string(iter),
                            result.params);
    }
    for (ClampEvent& e : step.events) {
      e.iteration = iter;
      result.clamp_events.push_back(e);
    }
    const double previous = result.loglik_trace.back();
    result.params = std::move(step.params);
    result.loglik_trace.push_back(next.loglik);
    result.iterations = iter;
    resp = std::move(next);
    if (std::abs(resp.loglik - previous) <= config.rel_tol * std::abs(previous)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace dpem
