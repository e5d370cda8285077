#pragma once

// Simulation benchmark: for every (group, overlap, replicate) draw a true
// mixture and a sample, fit it from every initialization method, and score
// the fits by the scaled mean error D and by likelihood attainment.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpem/em.hpp"
#include "dpem/error.hpp"
#include "dpem/fit.hpp"
#include "dpem/metrics.hpp"
#include "dpem/simulate.hpp"
#include "dpem/textio.hpp"

namespace dpem {

struct BenchmarkConfig {
  std::vector<int> groups{1, 2, 3, 4};
  std::vector<double> ov_values{0.05, 0.1, 0.15, 0.2, 0.25};
  std::size_t replicates = 500;
  std::size_t n = 1000;
  std::size_t k = 10;
  std::vector<InitMethod> methods;
  EmConfig em = EmConfig::simulation();
  std::uint64_t master_seed = 1;
  std::size_t threads = 0;  // 0: one per hardware thread

  void validate() const {
    if (groups.empty()) throw InputError("benchmark needs at least one group");
    for (int g : groups) {
      if (g < 1 || g > 4) throw InputError("benchmark group must be 1..4");
    }
    if (ov_values.empty()) throw InputError("benchmark needs at least one overlap value");
    for (double ov : ov_values) {
      if (!(ov > 0.0) || !(ov < 1.0)) throw InputError("benchmark overlap must lie in (0, 1)");
    }
    if (replicates < 1) throw InputError("benchmark needs at least one replicate");
    if (methods.empty()) throw InputError("benchmark needs at least one method");
    if (k < 1 || n < k) throw InputError("benchmark needs 1 <= K <= N");
    em.validate(k);
  }

  /// Reads the JSON form:
  ///   {"groups": [4], "ov_values": [0.2], "replicates": 50, "N": 1000,
  ///    "K": 10, "methods": ["eq", "hclu-a", "dp-q1", "dp-q4(0.1)"],
  ///    "em": {"sigma_min": 0.01, "alpha_min": 1e-4, "max_iters": 5000,
  ///           "rel_tol": 1e-8},
  ///    "master_seed": 7, "threads": 0}
  /// A method may also be an object {"name": "dp-q4", "delta": 0.1}.
  static BenchmarkConfig from_json(const nlohmann::json& j) {
    BenchmarkConfig c;
    try {
      if (j.contains("groups")) c.groups = j.at("groups").get<std::vector<int>>();
      if (j.contains("ov_values")) c.ov_values = j.at("ov_values").get<std::vector<double>>();
      if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::size_t>();
      if (j.contains("N")) c.n = j.at("N").get<std::size_t>();
      if (j.contains("K")) c.k = j.at("K").get<std::size_t>();
      if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
      if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
      if (j.contains("em")) {
        const auto& em = j.at("em");
        if (em.contains("sigma_min")) c.em.sigma_min = em.at("sigma_min").get<double>();
        if (em.contains("alpha_min")) c.em.alpha_min = em.at("alpha_min").get<double>();
        if (em.contains("max_iters")) c.em.max_iters = em.at("max_iters").get<std::size_t>();
        if (em.contains("rel_tol")) c.em.rel_tol = em.at("rel_tol").get<double>();
      }
      for (const auto& m : j.at("methods")) {
        if (m.is_string()) {
          c.methods.push_back(InitMethod::parse(m.get<std::string>()));
        } else {
          std::optional<double> delta;
          if (m.contains("delta")) delta = m.at("delta").get<double>();
          c.methods.push_back(InitMethod::parse(m.at("name").get<std::string>(), delta));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("benchmark config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static BenchmarkConfig from_json(std::istream& in) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("benchmark config: ") + e.what());
    }
    return from_json(j);
  }
};

struct BenchmarkRun {
  int group = 0;
  double ov = 0.0;
  std::size_t replicate = 0;
  std::size_t method = 0;  // index into config.methods
  FitStatus status = FitStatus::kOk;
  double log_d = 0.0;
  double loglik = 0.0;
  bool attained = false;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
};

struct BenchmarkSummary {
  int group = 0;
  double ov = 0.0;
  std::size_t method = 0;
  double avg_log_d = 0.0;  // over successful fits
  double avg_p = 0.0;      // failed fits count as not attained
  std::size_t fits = 0;
  std::size_t failures = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRun> runs;  // ordered by group, ov, replicate, method
  std::vector<BenchmarkSummary> summary;
};

/// Seed of one dataset: nested child streams of the master seed.
inline std::uint64_t dataset_seed(std::uint64_t master, int group, std::size_t ov_index,
                                  std::size_t replicate) {
  return Rng(master)
      .child(static_cast<std::uint64_t>(group))
      .child(ov_index)
      .child(replicate)
      .seed();
}

namespace detail {

inline void run_dataset(const BenchmarkConfig& cfg, int group, std::size_t ov_index,
                        std::size_t replicate, BenchmarkRun* out) {
  const double ov = cfg.ov_values[ov_index];
  Rng rng(dataset_seed(cfg.master_seed, group, ov_index, replicate));
  const GroupSpec spec = GroupSpec::group(group, cfg.k, ov, cfg.n, rng.seed());
  const MixtureParams truth = draw_mixture(spec, rng);
  const WeightedSample sample = sample_mixture(truth, cfg.n, rng);

  std::vector<double> ok_logliks;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    BenchmarkRun& run = out[m];
    run.group = group;
    run.ov = ov;
    run.replicate = replicate;
    run.method = m;
    const auto start = std::chrono::steady_clock::now();
    try {
      const FitOutcome fit = fit_mixture(sample, cfg.k, cfg.methods[m], cfg.em);
      run.loglik = fit.result.loglik();
      run.iterations = fit.result.iterations;
      run.log_d = std::log(std::max(d_criterion(truth, fit.result.params, cfg.n), 1e-300));
    } catch (const InfeasibleError&) {
      run.status = FitStatus::kInfeasible;
    } catch (const InvalidPartitionError&) {
      run.status = FitStatus::kInvalidPartition;
    } catch (const DivergenceError&) {
      run.status = FitStatus::kDivergence;
    } catch (const InputError&) {
      run.status = FitStatus::kInput;
    }
    run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (run.status == FitStatus::kOk) ok_logliks.push_back(run.loglik);
  }
  if (ok_logliks.empty()) return;
  const std::vector<bool> attained = attainment(ok_logliks);
  std::size_t i = 0;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    if (out[m].status == FitStatus::kOk) out[m].attained = attained[i++];
  }
}

}  // namespace detail

inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  const std::size_t methods = cfg.methods.size();
  const std::size_t per_group = cfg.ov_values.size() * cfg.replicates;
  const std::size_t datasets = cfg.groups.size() * per_group;

  BenchmarkResult result;
  result.runs.resize(datasets * methods);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t d = next++; d < datasets; d = next++) {
      const std::size_t g = d / per_group;
      const std::size_t o = (d % per_group) / cfg.replicates;
      const std::size_t r = d % cfg.replicates;
      try {
        detail::run_dataset(cfg, cfg.groups[g], o, r, &result.runs[d * methods]);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, datasets);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    for (std::size_t o = 0; o < cfg.ov_values.size(); ++o) {
      for (std::size_t m = 0; m < methods; ++m) {
        BenchmarkSummary s{cfg.groups[g], cfg.ov_values[o], m};
        double log_d_sum = 0.0;
        double attained = 0.0;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
          const std::size_t d = g * per_group + o * cfg.replicates + r;
          const BenchmarkRun& run = result.runs[d * methods + m];
          if (run.status != FitStatus::kOk) {
            ++s.failures;
            continue;
          }
          ++s.fits;
          log_d_sum += run.log_d;
          if (run.attained) attained += 1.0;
        }
        s.avg_log_d = s.fits ? log_d_sum / static_cast<double>(s.fits) : std::nan("");
        s.avg_p = attained / static_cast<double>(cfg.replicates);
        result.summary.push_back(s);
      }
    }
  }
  return result;
}

inline void write_runs_csv(std::ostream& out, const BenchmarkConfig& cfg, const BenchmarkResult& r) {
  out << "group,ov,replicate,method,status,logD,loglik,attained,iterations,wall_ms\n";
  for (const BenchmarkRun& run : r.runs) {
    const bool ok = run.status == FitStatus::kOk;
    out << run.group << ',' << format_double(run.ov) << ',' << run.replicate << ','
        << cfg.methods[run.method].name() << ',' << to_string(run.status) << ','
        << (ok ? format_double(run.log_d) : "") << ',' << (ok ? format_double(run.loglik) : "")
        << ',' << (run.attained ? 1 : 0) << ',' << run.iterations << ','
        << format_double(std::round(run.wall_ms * 1000.0) / 1000.0) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const BenchmarkConfig& cfg, const BenchmarkResult& r) {
  out << "group,ov,method,AvgLogD,AvgP,fits,failures\n";
  for (const BenchmarkSummary& s : r.summary) {
    out << s.group << ',' << format_double(s.ov) << ',' << cfg.methods[s.method].name() << ','
        << format_double(s.avg_log_d) << ',' << format_double(s.avg_p) << ',' << s.fits << ','
        << s.failures << '\n';
  }
}

}  // namespace dpem
