// dpem: fit univariate Gaussian mixtures initialized by optimal partitions.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpem/dpem.hpp"

namespace {

struct InputFlags {
  std::string path;
  std::string format = "points-csv";
  std::string range;
};

struct EmFlags {
  std::optional<double> sigma_min;
  std::optional<double> alpha_min;
  std::optional<std::size_t> max_iters;
  std::optional<double> rel_tol;

  dpem::EmOverrides overrides() const { return {sigma_min, alpha_min, max_iters, rel_tol}; }
};

void add_input(CLI::App* app, InputFlags& f) {
  app->add_option("input", f.path, "input file")->required();
  app->add_option("--format", f.format, "points-csv or spectra-tsv")
      ->check(CLI::IsMember({"points-csv", "spectra-tsv"}));
  app->add_option("--range", f.range, "m/z window lo..hi (spectra-tsv)");
}

void add_em(CLI::App* app, EmFlags& f) {
  app->add_option("--sigma-min", f.sigma_min, "floor on component standard deviations");
  app->add_option("--alpha-min", f.alpha_min, "floor on component weights");
  app->add_option("--max-iters", f.max_iters, "maximum EM iterations");
  app->add_option("--rel-tol", f.rel_tol, "relative log-likelihood change to stop at");
}

dpem::InputSpec to_input(const InputFlags& f) {
  dpem::InputSpec in{f.path, dpem::parse_format(f.format), std::nullopt};
  if (!f.range.empty()) {
    const auto [lo, hi] = dpem::parse_range(f.range);
    in.range = dpem::MzRange{lo, hi};
  }
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"univariate Gaussian mixture fitting"};
  app.require_subcommand(1);

  InputFlags fit_in;
  EmFlags fit_em;
  std::string fit_method = "dp-q1";
  std::optional<double> fit_delta;
  std::size_t fit_k = 2;
  std::string fit_out = ".";
  CLI::App* fit = app.add_subcommand("fit", "fit a mixture with K components");
  add_input(fit, fit_in);
  add_em(fit, fit_em);
  fit->add_option("--method", fit_method, "eq|hclu-c|hclu-a|dp-q1|dp-q2|dp-q3|dp-q4");
  fit->add_option("--delta", fit_delta, "delta of the dp-q4 score, in data units");
  fit->add_option("--k", fit_k, "number of components")->required();
  fit->add_option("--out", fit_out, "output directory");

  InputFlags scan_in;
  EmFlags scan_em;
  std::string scan_method = "dp-q1";
  std::optional<double> scan_delta;
  std::string scan_range = "1..10";
  std::string scan_out = ".";
  CLI::App* scan = app.add_subcommand("scan-k", "fit a range of K and select by BIC");
  add_input(scan, scan_in);
  add_em(scan, scan_em);
  scan->add_option("--method", scan_method, "eq|hclu-c|hclu-a|dp-q1|dp-q2|dp-q3|dp-q4");
  scan->add_option("--delta", scan_delta, "delta of the dp-q4 score, in data units");
  scan->add_option("--k-range", scan_range, "a..b");
  scan->add_option("--out", scan_out, "output directory");

  std::string bench_config;
  std::optional<std::uint64_t> bench_seed;
  std::string bench_out = ".";
  CLI::App* bench = app.add_subcommand("benchmark", "run the simulation benchmark");
  bench->add_option("config", bench_config, "JSON benchmark configuration")->required();
  bench->add_option("--seed", bench_seed, "master seed (overrides the configuration)");
  bench->add_option("--out", bench_out, "output directory");

  dpem::SimulateCommand sim_cmd;
  std::string sim_out = ".";
  CLI::App* sim = app.add_subcommand("simulate", "write a simulated dataset and its true mixture");
  sim->add_option("--group", sim_cmd.group, "scenario 1..4")->check(CLI::Range(1, 4));
  sim->add_option("--ov", sim_cmd.ov, "overlap of neighbouring components");
  sim->add_option("--n", sim_cmd.n, "number of observations");
  sim->add_option("--k", sim_cmd.k, "number of components");
  sim->add_option("--seed", sim_cmd.seed, "random seed");
  sim->add_option("--name", sim_cmd.name, "output file stem");
  sim->add_option("--out", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(dpem::ExitCode::kInput);
  }

  try {
    if (*fit) {
      dpem::FitCommand cmd{to_input(fit_in), fit_method, fit_delta, fit_k, fit_em.overrides(), fit_out};
      dpem::cmd_fit(cmd, std::cout);
    } else if (*scan) {
      const auto [lo, hi] = dpem::parse_range(scan_range);
      if (lo < 1 || lo != static_cast<std::size_t>(lo) || hi != static_cast<std::size_t>(hi)) {
        throw dpem::InputError("--k-range must be integers a..b with a >= 1");
      }
      dpem::ScanCommand cmd{to_input(scan_in), scan_method, scan_delta,
                            static_cast<std::size_t>(lo), static_cast<std::size_t>(hi),
                            scan_em.overrides(), scan_out};
      dpem::cmd_scan_k(cmd, std::cout);
    } else if (*bench) {
      dpem::cmd_benchmark({bench_config, bench_seed, bench_out}, std::cout);
    } else if (*sim) {
      sim_cmd.out_dir = sim_out;
      dpem::cmd_simulate(sim_cmd, std::cout);
    }
  } catch (const dpem::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(dpem::ExitCode::kInfeasible);
  } catch (const dpem::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(dpem::ExitCode::kDivergence);
  } catch (const dpem::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(dpem::ExitCode::kInput);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(dpem::ExitCode::kFailure);
  }
  return static_cast<int>(dpem::ExitCode::kOk);
}
