#pragma once

// Initialization methods and the partition -> initial parameters -> EM
// pipeline, including a scan over the number of components.

#include <cstddef>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpem/em.hpp"
#include "dpem/error.hpp"
#include "dpem/metrics.hpp"
#include "dpem/mixture.hpp"
#include "dpem/partition.hpp"
#include "dpem/reference_init.hpp"
#include "dpem/scoring.hpp"
#include "dpem/textio.hpp"

namespace dpem {

enum class InitKind { kEqualQuantiles, kHclustComplete, kHclustAverage, kDpQ1, kDpQ2, kDpQ3, kDpQ4 };

struct InitMethod {
  InitKind kind = InitKind::kDpQ1;
  double delta = 0.0;  // Q4 only

  bool is_dp() const {
    return kind == InitKind::kDpQ1 || kind == InitKind::kDpQ2 || kind == InitKind::kDpQ3 ||
           kind == InitKind::kDpQ4;
  }

  ScoringSpec scoring() const {
    switch (kind) {
      case InitKind::kDpQ1: return {ScoreKind::kQ1};
      case InitKind::kDpQ2: return {ScoreKind::kQ2};
      case InitKind::kDpQ3: return {ScoreKind::kQ3};
      case InitKind::kDpQ4: return {ScoreKind::kQ4, delta};
      default: throw InputError("method " + name() + " has no scoring function");
    }
  }

  /// Flag spelling, with the delta appended for Q4: "dp-q4(0.1)".
  std::string name() const {
    switch (kind) {
      case InitKind::kEqualQuantiles: return "eq";
      case InitKind::kHclustComplete: return "hclu-c";
      case InitKind::kHclustAverage: return "hclu-a";
      case InitKind::kDpQ1: return "dp-q1";
      case InitKind::kDpQ2: return "dp-q2";
      case InitKind::kDpQ3: return "dp-q3";
      case InitKind::kDpQ4: return "dp-q4(" + format_double(delta) + ")";
    }
    return "unknown";
  }

  /// Accepts "eq", "hclu-c", "hclu-a", "dp-q1".."dp-q4"; Q4 takes its delta
  /// from `delta`, or inline as "dp-q4(0.1)" or "dp-q4:0.1".
  static InitMethod parse(std::string_view text, std::optional<double> delta = std::nullopt) {
    std::string head(text);
    std::optional<double> inline_delta;
    if (const auto open = head.find_first_of("(:"); open != std::string::npos) {
      std::string tail = head.substr(open + 1);
      if (!tail.empty() && tail.back() == ')') tail.pop_back();
      inline_delta = parse_double(tail);
      if (!inline_delta) throw InputError("bad delta in method '" + std::string(text) + "'");
      head.resize(open);
    }
    for (char& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (char& c : head) if (c == '_') c = '-';
    InitMethod m;
    if (head == "eq") m.kind = InitKind::kEqualQuantiles;
    else if (head == "hclu-c") m.kind = InitKind::kHclustComplete;
    else if (head == "hclu-a") m.kind = InitKind::kHclustAverage;
    else if (head == "dp-q1") m.kind = InitKind::kDpQ1;
    else if (head == "dp-q2") m.kind = InitKind::kDpQ2;
    else if (head == "dp-q3") m.kind = InitKind::kDpQ3;
    else if (head == "dp-q4") m.kind = InitKind::kDpQ4;
    else throw InputError("unknown method '" + std::string(text) + "'");
    if (m.kind == InitKind::kDpQ4) {
      const std::optional<double> d = inline_delta ? inline_delta : delta;
      if (!d || !(*d > 0.0)) throw InputError("method dp-q4 needs a positive delta");
      m.delta = *d;
    } else if (inline_delta) {
      throw InputError("only dp-q4 takes a delta");
    }
    return m;
  }
};

inline BlockPartition initial_partition(const WeightedSample& data, std::size_t k,
                                        const InitMethod& method) {
  switch (method.kind) {
    case InitKind::kEqualQuantiles: return quantile_partition(data, k);
    case InitKind::kHclustComplete: return hierarchical_partition(data, k, Linkage::kComplete);
    case InitKind::kHclustAverage: return hierarchical_partition(data, k, Linkage::kAverage);
    default: return dp_partition(data, k, method.scoring()).partition;
  }
}

struct FitOutcome {
  BlockPartition partition;
  MixtureParams init;
  FitResult result;
};

inline FitOutcome fit_from_partition(const WeightedSample& data, BlockPartition partition,
                                     const EmConfig& config) {
  MixtureParams init = blocks_to_params(data, partition, config.sigma_min);
  FitResult result = run_em(data, init, config);
  return {std::move(partition), std::move(init), std::move(result)};
}

/// Partition with `method`, turn the blocks into initial parameters, run EM.
inline FitOutcome fit_mixture(const WeightedSample& data, std::size_t k, const InitMethod& method,
                              const EmConfig& config) {
  config.validate(k);
  return fit_from_partition(data, initial_partition(data, k, method), config);
}

// ---------------------------------------------------------------------------
// Model order scan

enum class FitStatus { kOk, kInput, kInfeasible, kInvalidPartition, kDivergence };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::kOk: return "ok";
    case FitStatus::kInput: return "input_error";
    case FitStatus::kInfeasible: return "infeasible";
    case FitStatus::kInvalidPartition: return "invalid_partition";
    case FitStatus::kDivergence: return "divergence";
  }
  return "error";
}

struct ScanRow {
  std::size_t k = 0;
  FitStatus status = FitStatus::kOk;
  double loglik = 0.0;
  double bic = 0.0;
  std::optional<FitOutcome> fit;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  std::optional<std::size_t> best;  // index into rows with the smallest BIC
};

/// Fits every K in [k_lo, k_hi] and selects the one with the smallest BIC.
/// Failed fits are kept as rows and skipped by the selection. DP methods
/// fill the recursion once for all K.
inline ScanResult scan_k(const WeightedSample& data, std::size_t k_lo, std::size_t k_hi,
                         const InitMethod& method, const EmConfig& config) {
  if (k_lo < 1 || k_hi < k_lo) throw InputError("K range must satisfy 1 <= lo <= hi");
  std::vector<std::optional<PartitionResult>> dp;
  if (method.is_dp()) dp = dp_partition_all(data, k_hi, method.scoring());

  ScanResult out;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    ScanRow row;
    row.k = k;
    try {
      config.validate(k);
      BlockPartition partition = [&] {
        if (!method.is_dp()) return initial_partition(data, k, method);
        if (!dp[k - 1]) throw InfeasibleError("no feasible partition into K = " + std::to_string(k));
        return dp[k - 1]->partition;
      }();
      row.fit = fit_from_partition(data, std::move(partition), config);
      row.loglik = row.fit->result.loglik();
      row.bic = bic(row.loglik, k, data.total_weight());
    } catch (const InfeasibleError&) {
      row.status = FitStatus::kInfeasible;
    } catch (const InvalidPartitionError&) {
      row.status = FitStatus::kInvalidPartition;
    } catch (const DivergenceError&) {
      row.status = FitStatus::kDivergence;
    } catch (const InputError&) {
      row.status = FitStatus::kInput;
    }
    if (row.status == FitStatus::kOk &&
        (!out.best || row.bic < out.rows[*out.best].bic)) {
      out.best = out.rows.size();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace dpem
