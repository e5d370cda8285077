#pragma once

// File-level commands behind the command line tool: fit, scan-k, benchmark
// and simulate.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dpem/benchmark.hpp"
#include "dpem/em.hpp"
#include "dpem/error.hpp"
#include "dpem/fit.hpp"
#include "dpem/io.hpp"
#include "dpem/metrics.hpp"
#include "dpem/simulate.hpp"
#include "dpem/textio.hpp"

namespace dpem {

enum class InputFormat { kPointsCsv, kSpectraTsv };

inline InputFormat parse_format(const std::string& text) {
  if (text == "points-csv") return InputFormat::kPointsCsv;
  if (text == "spectra-tsv") return InputFormat::kSpectraTsv;
  throw InputError("unknown format '" + text + "' (expected points-csv or spectra-tsv)");
}

/// "a..b" with a <= b.
inline std::pair<double, double> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw InputError("range '" + text + "' is not of the form a..b");
  const auto lo = parse_double(std::string_view(text).substr(0, dots));
  const auto hi = parse_double(std::string_view(text).substr(dots + 2));
  if (!lo || !hi || *hi < *lo) throw InputError("range '" + text + "' is not of the form a..b");
  return {*lo, *hi};
}

/// Optional overrides of the EM profile chosen by the input format.
struct EmOverrides {
  std::optional<double> sigma_min;
  std::optional<double> alpha_min;
  std::optional<std::size_t> max_iters;
  std::optional<double> rel_tol;

  EmConfig apply(EmConfig base) const {
    if (sigma_min) base.sigma_min = *sigma_min;
    if (alpha_min) base.alpha_min = *alpha_min;
    if (max_iters) base.max_iters = *max_iters;
    if (rel_tol) base.rel_tol = *rel_tol;
    return base;
  }
};

struct NamedSample {
  std::string name;  // file stem, plus ".<sample index>" for spectra
  WeightedSample data;
};

struct InputSpec {
  std::filesystem::path path;
  InputFormat format = InputFormat::kPointsCsv;
  std::optional<MzRange> range;  // spectra only
};

inline std::vector<NamedSample> load_samples(const InputSpec& input, std::ostream* log = nullptr) {
  std::ifstream in(input.path);
  if (!in) throw InputError("cannot open " + input.path.string());
  const std::string stem = input.path.stem().string();
  std::vector<NamedSample> out;
  if (input.format == InputFormat::kPointsCsv) {
    out.push_back({stem, read_points_csv(in, input.path.string())});
    return out;
  }
  SpectraSet set = read_spectra_tsv(in, input.path.string(), input.range);
  if (log && set.clipped > 0) {
    *log << "warning: " << set.clipped << " negative intensities clipped to 0\n";
  }
  for (std::size_t s = 0; s < set.samples.size(); ++s) {
    out.push_back({stem + "." + std::to_string(s + 1), std::move(set.samples[s])});
  }
  return out;
}

inline EmConfig default_em(InputFormat format) {
  return format == InputFormat::kSpectraTsv ? EmConfig::spectra() : EmConfig::simulation();
}

inline ModelRecord make_record(const InitMethod& method, const FitResult& fit,
                               const WeightedSample& data, const EmConfig& em) {
  ModelRecord m{.method = method.name(), .params = fit.params};
  m.loglik = fit.loglik();
  m.total_weight = data.total_weight();
  m.bic = m.total_weight > 1.0 ? bic(m.loglik, fit.params.size(), m.total_weight) : std::nan("");
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  m.sigma_min = em.sigma_min;
  m.alpha_min = em.alpha_min;
  m.clamp_events = fit.clamp_events;
  return m;
}

inline void write_model_file(const std::filesystem::path& path, const ModelRecord& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_model(out, m);
}

inline std::string summary_line(const std::string& name, const ModelRecord& m) {
  return name + ": K=" + std::to_string(m.params.size()) + " method=" + m.method +
         " loglik=" + format_double(m.loglik) + " bic=" + format_double(m.bic) +
         " iterations=" + std::to_string(m.iterations) +
         " converged=" + (m.converged ? "true" : "false") +
         " clamp_events=" + std::to_string(m.clamp_events.size());
}

// ---------------------------------------------------------------------------

struct FitCommand {
  InputSpec input;
  std::string method = "dp-q1";
  std::optional<double> delta;
  std::size_t k = 2;
  EmOverrides em;
  std::filesystem::path out_dir = ".";
};

/// Fits every sample of the input and writes <out>/<name>.model for each.
inline std::vector<std::filesystem::path> cmd_fit(const FitCommand& cmd, std::ostream& log) {
  const InitMethod method = InitMethod::parse(cmd.method, cmd.delta);
  const EmConfig em = cmd.em.apply(default_em(cmd.input.format));
  em.validate(cmd.k);
  const std::vector<NamedSample> samples = load_samples(cmd.input, &log);
  std::filesystem::create_directories(cmd.out_dir);
  std::vector<std::filesystem::path> written;
  for (const NamedSample& s : samples) {
    const FitOutcome fit = fit_mixture(s.data, cmd.k, method, em);
    const ModelRecord record = make_record(method, fit.result, s.data, em);
    const auto path = cmd.out_dir / (s.name + ".model");
    write_model_file(path, record);
    log << summary_line(s.name, record) << '\n';
    written.push_back(path);
  }
  return written;
}

struct ScanCommand {
  InputSpec input;
  std::string method = "dp-q4";
  std::optional<double> delta;
  std::size_t k_lo = 1;
  std::size_t k_hi = 10;
  EmOverrides em;
  std::filesystem::path out_dir = ".";
};

struct ScanOutput {
  std::string name;
  std::filesystem::path table;
  std::optional<std::filesystem::path> best_model;
  std::optional<std::size_t> best_k;
};

inline void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "K,status,loglik,bic,iterations,converged\n";
  for (const ScanRow& row : scan.rows) {
    const bool ok = row.status == FitStatus::kOk;
    out << row.k << ',' << to_string(row.status) << ',' << (ok ? format_double(row.loglik) : "")
        << ',' << (ok ? format_double(row.bic) : "") << ','
        << (ok ? std::to_string(row.fit->result.iterations) : "") << ','
        << (ok ? (row.fit->result.converged ? "true" : "false") : "") << '\n';
  }
}

/// Fits each K of the range, writes <out>/<name>.scan.csv and the smallest
/// BIC model as <out>/<name>.best.model.
inline std::vector<ScanOutput> cmd_scan_k(const ScanCommand& cmd, std::ostream& log) {
  const InitMethod method = InitMethod::parse(cmd.method, cmd.delta);
  const EmConfig em = cmd.em.apply(default_em(cmd.input.format));
  const std::vector<NamedSample> samples = load_samples(cmd.input, &log);
  std::filesystem::create_directories(cmd.out_dir);
  std::vector<ScanOutput> outputs;
  for (const NamedSample& s : samples) {
    const ScanResult scan = scan_k(s.data, cmd.k_lo, cmd.k_hi, method, em);
    ScanOutput o{.name = s.name, .table = cmd.out_dir / (s.name + ".scan.csv")};
    {
      std::ofstream table(o.table);
      if (!table) throw Error("cannot write " + o.table.string());
      write_scan_csv(table, scan);
    }
    if (scan.best) {
      const ScanRow& best = scan.rows[*scan.best];
      const ModelRecord record = make_record(method, best.fit->result, s.data, em);
      o.best_model = cmd.out_dir / (s.name + ".best.model");
      o.best_k = best.k;
      write_model_file(*o.best_model, record);
      log << summary_line(s.name, record) << '\n';
    } else {
      log << s.name << ": no K in the range produced a fit\n";
    }
    outputs.push_back(std::move(o));
  }
  return outputs;
}

struct BenchmarkCommand {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
};

struct BenchmarkFiles {
  std::filesystem::path runs;
  std::filesystem::path summary;
};

/// Writes <out>/benchmark_runs.csv (one row per fit) and
/// <out>/benchmark_summary.csv (per group, overlap and method).
inline BenchmarkFiles cmd_benchmark(const BenchmarkCommand& cmd, std::ostream& log) {
  std::ifstream in(cmd.config);
  if (!in) throw InputError("cannot open " + cmd.config.string());
  BenchmarkConfig cfg = BenchmarkConfig::from_json(in);
  if (cmd.seed) cfg.master_seed = *cmd.seed;
  const BenchmarkResult result = run_benchmark(cfg);
  std::filesystem::create_directories(cmd.out_dir);
  BenchmarkFiles files{cmd.out_dir / "benchmark_runs.csv", cmd.out_dir / "benchmark_summary.csv"};
  {
    std::ofstream out(files.runs);
    if (!out) throw Error("cannot write " + files.runs.string());
    write_runs_csv(out, cfg, result);
  }
  {
    std::ofstream out(files.summary);
    if (!out) throw Error("cannot write " + files.summary.string());
    write_summary_csv(out, cfg, result);
  }
  log << "benchmark: " << result.runs.size() << " fits, summary in " << files.summary.string() << '\n';
  return files;
}

struct SimulateCommand {
  int group = 4;
  double ov = 0.1;
  std::size_t n = 1000;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  std::string name = "simulated";
  std::filesystem::path out_dir = ".";
};

/// Writes <out>/<name>.csv (points) and <out>/<name>.truth.model.
inline std::pair<std::filesystem::path, std::filesystem::path> cmd_simulate(const SimulateCommand& cmd,
                                                                            std::ostream& log) {
  Rng rng(cmd.seed);
  const GroupSpec spec = GroupSpec::group(cmd.group, cmd.k, cmd.ov, cmd.n, cmd.seed);
  const MixtureParams truth = draw_mixture(spec, rng);
  const WeightedSample sample = sample_mixture(truth, cmd.n, rng);
  std::filesystem::create_directories(cmd.out_dir);
  const auto points = cmd.out_dir / (cmd.name + ".csv");
  const auto model = cmd.out_dir / (cmd.name + ".truth.model");
  {
    std::ofstream out(points);
    if (!out) throw Error("cannot write " + points.string());
    write_points_csv(out, sample);
  }
  ModelRecord record{.method = "truth", .params = truth};
  record.loglik = log_likelihood(sample, truth);
  record.total_weight = sample.total_weight();
  record.bic = record.total_weight > 1.0 ? bic(record.loglik, truth.size(), record.total_weight)
                                         : std::nan("");
  record.converged = true;
  write_model_file(model, record);
  log << "simulate: " << cmd.n << " points from group " << cmd.group << " (K=" << cmd.k
      << ", ov=" << format_double(cmd.ov) << ") written to " << points.string() << '\n';
  return {points, model};
}

}  // namespace dpem
