#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "dpem/mixture.hpp"
#include "dpem/simulate.hpp"

using namespace dpem;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Direct evaluation of the Gaussian density, independent of the library.
double gauss(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

MixtureParams standard_normal() { return MixtureParams({1.0}, {0.0}, {1.0}); }

}  // namespace

TEST_CASE("MixtureParams rejects invalid parameters", "[mixture]") {
  CHECK_THROWS_AS(MixtureParams({}, {}, {}), InputError);
  CHECK_THROWS_AS(MixtureParams({0.5, 0.5}, {0.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(MixtureParams({0.6, 0.5}, {0.0, 1.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(MixtureParams({1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(MixtureParams({1.0}, {0.0}, {0.0}), InputError);
  CHECK_NOTHROW(MixtureParams({0.25, 0.75}, {0.0, 1.0}, {1.0, 2.0}));
}

TEST_CASE("WeightedSample invariants", "[mixture]") {
  CHECK_THROWS_AS(WeightedSample({1.0, 1.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(WeightedSample({2.0, 1.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(WeightedSample({1.0, 2.0}, {1.0, -1.0}), InputError);
  CHECK_THROWS_AS(WeightedSample({1.0, 2.0}, {0.0, 0.0}), InputError);
  CHECK_THROWS_AS(WeightedSample({1.0, 2.0, 3.5}, {1.0, 1.0, 1.0}, 1.0), InputError);
  CHECK_NOTHROW(WeightedSample({1.0, 2.0, 3.0}, {1.0, 0.0, 1.0}, 1.0));

  SECTION("raw observations collapse ties into counts") {
    const WeightedSample s = WeightedSample::from_observations({3.0, 1.0, 3.0, 2.0, 3.0});
    CHECK(s.xs() == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.ys() == std::vector<double>{1.0, 1.0, 3.0});
    CHECK(s.total_weight() == 5.0);
  }
}

TEST_CASE("mixture_pdf", "[mixture]") {
  CHECK_THAT(mixture_pdf(0.0, standard_normal()), WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15));
  CHECK_THAT(mixture_pdf(0.0, standard_normal()), WithinAbs(0.398942, 1e-6));

  const MixtureParams twin({0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0});
  for (double x : {-2.0, 0.0, 0.7}) {
    CHECK_THAT(mixture_pdf(x, twin), WithinRel(mixture_pdf(x, standard_normal()), 1e-15));
  }

  const MixtureParams two({0.3, 0.7}, {0.0, 2.0}, {1.0, 0.5});
  const double expected = 0.3 * gauss(1.0, 0.0, 1.0) + 0.7 * gauss(1.0, 2.0, 0.5);
  CHECK_THAT(mixture_pdf(1.0, two), WithinRel(expected, 1e-14));
  CHECK_THAT(std::exp(log_mixture_pdf(1.0, two)), WithinRel(expected, 1e-14));
}

TEST_CASE("log_mixture_pdf stays finite far in the tails", "[mixture]") {
  const MixtureParams narrow({0.5, 0.5}, {0.0, 1.0}, {0.01, 0.01});
  CHECK(mixture_pdf(40.0, narrow) == 0.0);
  const double lp = log_mixture_pdf(40.0, narrow);
  CHECK(std::isfinite(lp));
  // Dominated by the component at 1: -0.5 * (39/0.01)^2 - log(0.01) - log sqrt(2 pi) + log 0.5.
  const double expected = -0.5 * 3900.0 * 3900.0 - std::log(0.01) - 0.5 * std::log(2.0 * std::numbers::pi) +
                          std::log(0.5);
  CHECK_THAT(lp, WithinRel(expected, 1e-12));
}

TEST_CASE("log_likelihood", "[mixture]") {
  const WeightedSample one({0.0}, {1.0});
  CHECK_THAT(log_likelihood(one, standard_normal()), WithinAbs(-0.918939, 1e-6));

  const WeightedSample two({-1.0, 1.0}, {2.0, 3.0});
  const double expected = 2.0 * std::log(gauss(-1.0, 0.0, 1.0)) + 3.0 * std::log(gauss(1.0, 0.0, 1.0));
  CHECK_THAT(log_likelihood(two, standard_normal()), WithinRel(expected, 1e-14));
  CHECK_THAT(log_likelihood(two, standard_normal()), WithinAbs(-7.094694, 1e-5));

  SECTION("linear in the counts") {
    const WeightedSample doubled({-1.0, 1.0}, {4.0, 6.0});
    CHECK(log_likelihood(doubled, standard_normal()) == 2.0 * log_likelihood(two, standard_normal()));
  }

  SECTION("zero-count points contribute nothing") {
    const WeightedSample with_zero({-1.0, 1.0, 1e6}, {2.0, 3.0, 0.0});
    CHECK(log_likelihood(with_zero, standard_normal()) == log_likelihood(two, standard_normal()));
  }

  SECTION("vanishing density is reported as -infinity") {
    const MixtureParams tiny({1.0}, {0.0}, {1e-300});
    const WeightedSample far({1e300}, {1.0});
    CHECK(log_likelihood(far, tiny) == kNegInf);
  }

  SECTION("unit counts match the naive per-observation sum") {
    Rng rng(17);
    const MixtureParams p({0.2, 0.5, 0.3}, {-1.0, 0.5, 3.0}, {0.4, 1.0, 0.7});
    std::vector<double> raw(300);
    for (double& v : raw) v = rng.uniform(-3.0, 5.0);
    double naive = 0.0;
    for (double v : raw) naive += std::log(0.2 * gauss(v, -1.0, 0.4) + 0.5 * gauss(v, 0.5, 1.0) + 0.3 * gauss(v, 3.0, 0.7));
    CHECK_THAT(log_likelihood(WeightedSample::from_observations(raw), p), WithinRel(naive, 1e-10));
  }
}

TEST_CASE("exact_binned_log_likelihood", "[mixture]") {
  CHECK_THROWS_AS(exact_binned_log_likelihood(WeightedSample({0.0}, {1.0}), standard_normal()), InputError);

  SECTION("a very wide bin holds all the mass") {
    const WeightedSample wide({0.0}, {1.0}, 80.0);
    CHECK_THAT(exact_binned_log_likelihood(wide, standard_normal()), WithinAbs(0.0, 1e-15));
  }

  SECTION("bins symmetric around the mean have equal probability") {
    const WeightedSample left({-0.75}, {1.0}, 0.5);
    const WeightedSample right({0.75}, {1.0}, 0.5);
    CHECK_THAT(exact_binned_log_likelihood(left, standard_normal()),
               WithinRel(exact_binned_log_likelihood(right, standard_normal()), 1e-14));
  }

  SECTION("narrow bin at the mode") {
    const WeightedSample bin({0.0}, {1.0}, 0.01);
    const double p = std::exp(exact_binned_log_likelihood(bin, standard_normal()));
    CHECK_THAT(p, WithinRel(std::erf(0.005 / std::numbers::sqrt2), 1e-14));
    CHECK_THAT(p, WithinAbs(0.0039894, 1e-7));
    CHECK(std::abs(0.01 * gauss(0.0, 0.0, 1.0) - p) / p < 1e-5);
  }

  SECTION("far-tail bins keep their precision") {
    const WeightedSample tail({8.0}, {1.0}, 0.1);
    const double p = std::exp(exact_binned_log_likelihood(tail, standard_normal()));
    const double expected = 0.5 * (std::erfc(7.95 / std::numbers::sqrt2) - std::erfc(8.05 / std::numbers::sqrt2));
    CHECK_THAT(p, WithinRel(expected, 1e-12));
  }
}

TEST_CASE("blocks_to_params", "[mixture]") {
  const WeightedSample data({1, 2, 3, 10, 11, 12}, {1, 1, 1, 1, 1, 1});
  const MixtureParams p = blocks_to_params(data, BlockPartition({0, 3, 6}, 6), 1e-2);
  CHECK_THAT(p.mean(0), WithinRel(2.0, 1e-15));
  CHECK_THAT(p.mean(1), WithinRel(11.0, 1e-15));
  CHECK_THAT(p.std_dev(0), WithinRel(std::sqrt(2.0 / 3.0), 1e-14));
  CHECK_THAT(p.std_dev(1), WithinRel(std::sqrt(2.0 / 3.0), 1e-14));
  CHECK(p.weight(0) == 0.5);
  CHECK(p.weight(1) == 0.5);

  SECTION("single block gives the grand weighted moments") {
    const WeightedSample w({0.0, 1.0}, {1.0, 3.0});
    const MixtureParams q = blocks_to_params(w, BlockPartition({0, 2}, 2), 1e-2);
    CHECK(q.weight(0) == 1.0);
    CHECK_THAT(q.mean(0), WithinRel(0.75, 1e-15));
    CHECK_THAT(q.std_dev(0), WithinRel(std::sqrt(0.1875), 1e-14));
    CHECK_THAT(q.std_dev(0), WithinAbs(0.43301, 1e-5));
  }

  SECTION("singleton blocks are floored at sigma_min") {
    const MixtureParams q = blocks_to_params(data, BlockPartition({0, 1, 6}, 6), 0.25);
    CHECK(q.std_dev(0) == 0.25);
    CHECK(q.mean(0) == 1.0);
  }

  SECTION("zero-weight block is an invalid partition") {
    const WeightedSample z({0.0, 1.0, 2.0}, {1.0, 0.0, 1.0});
    CHECK_THROWS_AS(blocks_to_params(z, BlockPartition({0, 1, 2, 3}, 3), 1e-2), InvalidPartitionError);
  }

  SECTION("large offsets keep their precision") {
    const WeightedSample far({4000.0, 4000.5, 4001.0}, {1.0, 2.0, 1.0});
    const MixtureParams q = blocks_to_params(far, BlockPartition({0, 3}, 3), 1e-6);
    CHECK_THAT(q.mean(0), WithinRel(4000.5, 1e-15));
    CHECK_THAT(q.std_dev(0), WithinRel(std::sqrt(0.125), 1e-12));
  }
}

TEST_CASE("blocks_to_params: weights sum to one and unit counts match the unweighted formulas", "[mixture]") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform() * 60);
    std::vector<double> raw(n);
    for (double& v : raw) v = rng.uniform(-50.0, 50.0);
    const WeightedSample data = WeightedSample::from_observations(raw);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * std::min<std::size_t>(data.size(), 6));
    std::vector<std::size_t> bounds{0};
    for (std::size_t b = 1; b < k; ++b) bounds.push_back(b * data.size() / k);
    bounds.push_back(data.size());
    const BlockPartition part(bounds, data.size());
    const MixtureParams p = blocks_to_params(data, part, 1e-12);

    double sum = 0.0;
    for (double w : p.weights()) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    for (std::size_t b = 0; b < k; ++b) {
      // Unweighted formulas: count-normalized mean, std and size fraction.
      const std::size_t lo = part.begin(b), hi = part.end(b);
      const double count = static_cast<double>(hi - lo);
      double mean = 0.0;
      for (std::size_t i = lo; i < hi; ++i) mean += data.x(i);
      mean /= count;
      double var = 0.0;
      for (std::size_t i = lo; i < hi; ++i) var += (data.x(i) - mean) * (data.x(i) - mean);
      var /= count;
      CHECK_THAT(p.mean(b), WithinRel(mean, 1e-12) || WithinAbs(mean, 1e-12));
      CHECK_THAT(p.std_dev(b), WithinRel(std::max(std::sqrt(var), 1e-12), 1e-12));
      CHECK_THAT(p.weight(b), WithinRel(count / static_cast<double>(data.size()), 1e-12));
    }
  }
}

TEST_CASE("dense-bin likelihood agrees with the exact binned likelihood", "[mixture]") {
  const MixtureParams p({0.4, 0.6}, {0.0, 2.0}, {0.5, 0.3});
  const double width = 0.3 / 20.0;
  const double lo = -4.0;
  const std::size_t bins = 600;
  std::vector<double> xs(bins), ys(bins, 0.0);
  for (std::size_t n = 0; n < bins; ++n) xs[n] = lo + static_cast<double>(n) * width;
  // Histogram of a sample on bins centred at xs.
  Rng rng(3);
  const WeightedSample draws = sample_mixture(p, 5000, rng);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double pos = std::round((draws.x(i) - lo) / width);
    if (pos >= 0.0 && pos < static_cast<double>(bins)) ys[static_cast<std::size_t>(pos)] += draws.y(i);
  }
  const WeightedSample data(xs, ys, width);
  const double offset = data.total_weight() * std::log(width);
  const double dense = log_likelihood(data, p);
  const double exact = exact_binned_log_likelihood(data, p);
  CHECK(std::abs((exact - offset) - dense) <= 1e-4 * std::abs(dense));
}
