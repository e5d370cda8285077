// Fits one simulated dataset with every initialization method and prints
// how close each fit gets to the true means.
//
//   compare_methods [group] [ov] [seed]

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <vector>

#include "dpem/dpem.hpp"

int main(int argc, char** argv) {
  const int group = argc > 1 ? std::atoi(argv[1]) : 4;
  const double ov = argc > 2 ? std::atof(argv[2]) : 0.2;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1;
  const std::size_t n = 1000, k = 10;

  dpem::Rng rng(seed);
  const dpem::MixtureParams truth = dpem::draw_mixture(dpem::GroupSpec::group(group, k, ov, n, seed), rng);
  const dpem::WeightedSample sample = dpem::sample_mixture(truth, n, rng);
  const dpem::EmConfig em = dpem::EmConfig::simulation();

  const std::vector<std::string> names{"eq", "hclu-c", "hclu-a", "dp-q1", "dp-q2", "dp-q3", "dp-q4(0.1)"};
  std::vector<double> logliks;
  std::vector<double> log_ds;
  for (const std::string& name : names) {
    const dpem::FitOutcome fit = dpem::fit_mixture(sample, k, dpem::InitMethod::parse(name), em);
    logliks.push_back(fit.result.loglik());
    log_ds.push_back(std::log(std::max(dpem::d_criterion(truth, fit.result.params, n), 1e-300)));
  }
  const std::vector<bool> attained = dpem::attainment(logliks);

  std::cout << "group " << group << ", ov " << ov << ", seed " << seed << "\n\n";
  std::cout << std::left << std::setw(12) << "method" << std::right << std::setw(14) << "loglik"
            << std::setw(10) << "log D" << std::setw(10) << "attained" << '\n';
  for (std::size_t m = 0; m < names.size(); ++m) {
    std::cout << std::left << std::setw(12) << names[m] << std::right << std::fixed << std::setprecision(3)
              << std::setw(14) << logliks[m] << std::setw(10) << log_ds[m] << std::setw(10)
              << (attained[m] ? "yes" : "no") << '\n';
  }
}
