#include "helpers.hpp"

#include "mipost/error.hpp"
#include "mipost/mc.hpp"
#include "mipost/moments.hpp"

#include <doctest.h>

#include <cmath>

using namespace mipost;
using namespace mipost::testing;

TEST_CASE("log-gamma variates have the right first two moments") {
  for (double shape : {0.05, 0.3, 0.5, 1.0, 2.5, 40.0}) {
    McEngine eng = make_substream(99, 0);
    constexpr int kDraws = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < kDraws; ++k) {
      const double x = std::exp(sample_log_gamma(shape, eng));
      sum += x;
      sum_sq += x * x;
    }
    const double mean = sum / kDraws;
    const double var = sum_sq / kDraws - mean * mean;
    CAPTURE(shape);
    // Gamma(k,1): mean k, variance k; SE of the mean sqrt(k / N)
    CHECK(std::abs(mean - shape) <= 5.0 * std::sqrt(shape / kDraws));
    CHECK(std::abs(var / shape - 1.0) <= 0.05 + 5.0 * std::sqrt((6.0 / shape + 2.0) / kDraws));
  }
  McEngine eng = make_substream(1, 0);
  CHECK(std::isfinite(sample_log_gamma(1e-3, eng)));
}

TEST_CASE("dirichlet draws") {
  McEngine eng = make_substream(5, 0);
  const PosteriorCounts c = counts({{2, 1, 0.2}, {1, 2, 0.4}});
  for (int k = 0; k < 1000; ++k) {
    const Matrix pi = sample_dirichlet(c, eng);
    double total = 0.0;
    for (double v : pi.values()) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    const double mi = point_mi(pi);
    CHECK(mi >= 0.0);
    CHECK(mi <= std::log(2.0) + 1e-12);
  }
  CHECK_THROWS_AS(sample_dirichlet(counts({{1, 0}, {1, 1}}), eng), ZeroCellError);
}

TEST_CASE("dirichlet marginals are beta distributed") {
  // pi_ij ~ Beta(n_ij, n - n_ij): mean n_ij/n, variance n_ij(n - n_ij)/(n^2 (n+1))
  const PosteriorCounts c = counts({{0.4, 3.0}, {1.5, 0.6}});
  const double n = c.total();
  McEngine eng = make_substream(31, 0);
  constexpr int kDraws = 100000;
  std::array<double, 4> sum{}, sum_sq{};
  for (int k = 0; k < kDraws; ++k) {
    const Matrix pi = sample_dirichlet(c, eng);
    for (std::size_t a = 0; a < 4; ++a) {
      sum[a] += pi.values()[a];
      sum_sq[a] += pi.values()[a] * pi.values()[a];
    }
  }
  for (std::size_t a = 0; a < 4; ++a) {
    const double alpha = c.matrix().values()[a];
    const double mean = alpha / n;
    const double var = alpha * (n - alpha) / (n * n * (n + 1));
    const double emp_mean = sum[a] / kDraws;
    const double emp_var = sum_sq[a] / kDraws - emp_mean * emp_mean;
    CAPTURE(a);
    CHECK(std::abs(emp_mean - mean) <= 4.0 * std::sqrt(var / kDraws));
    CHECK(std::abs(emp_var / var - 1.0) <= 0.03);
  }
}

TEST_CASE("mc results are deterministic in the seed, not the worker count") {
  const PosteriorCounts c = counts({{2, 1}, {1, 2}});
  const std::vector<double> thresholds{0.05, 0.2};
  const McEstimate one = mc_estimate(c, 5000, 7, thresholds, 1);
  for (unsigned w : {1u, 2u, 3u, 8u}) {
    const McEstimate other = mc_estimate(c, 5000, 7, thresholds, w);
    CHECK(other.mean.value == one.mean.value);
    CHECK(other.mean.std_error == one.mean.std_error);
    CHECK(other.variance.value == one.variance.value);
    CHECK(other.kurtosis.value == one.kurtosis.value);
    CHECK(other.bin_counts == one.bin_counts);
    CHECK(other.max_sample == one.max_sample);
    CHECK(other.tails[1].frequency == one.tails[1].frequency);
  }
  CHECK(mc_samples(c, 1000, 3, 1) == mc_samples(c, 1000, 3, 4));
  CHECK(mc_samples(c, 1000, 3) != mc_samples(c, 1000, 4));
  CHECK(mc_estimate(c, 5000, 8).mean.value != one.mean.value);
}

TEST_CASE("mc estimate structure") {
  const PosteriorCounts c = counts({{2, 1, 3}, {1, 2, 0.5}});
  const std::vector<double> thresholds{0.0, 0.1, 10.0};
  const McEstimate est = mc_estimate(c, 10007, 1, thresholds);
  CHECK(est.sample_count == 10007);
  CHECK(est.seed == 1);
  CHECK(est.i_max == std::log(2.0));
  REQUIRE(est.bin_edges.size() == kMcHistogramBins + 1);
  REQUIRE(est.bin_counts.size() == kMcHistogramBins);
  CHECK(est.bin_edges.front() == 0.0);
  CHECK(est.bin_edges.back() == est.i_max);
  std::size_t total = 0;
  for (std::size_t b : est.bin_counts) total += b;
  CHECK(total == est.sample_count);
  CHECK(est.max_sample <= est.i_max + 1e-12);
  REQUIRE(est.tails.size() == 3);
  CHECK(est.tails[0].frequency == 1.0);
  CHECK(est.tails[2].frequency == 0.0);
  CHECK(est.tails[1].frequency > 0.0);
  CHECK(est.tails[1].std_error > 0.0);
  CHECK(est.mean.std_error > 0.0);
  CHECK(est.variance.value > 0.0);

  for (double v : mc_samples(c, 2000, 2)) {
    CHECK(v >= 0.0);
    CHECK(v <= std::log(2.0) + 1e-12);
  }
}

TEST_CASE("mc agrees with the exact mean") {
  const PosteriorCounts c = counts({{2, 1}, {1, 2}});
  const McEstimate est = mc_estimate(c, 200000, 11);
  CHECK(std::abs(est.mean.value - mean_exact(c)) <= 4.0 * est.mean.std_error);
}

TEST_CASE("standard errors scale as N^-1/2") {
  const PosteriorCounts c = counts({{8, 2}, {2, 8}});
  const McEstimate small = mc_estimate(c, 20000, 3);
  const McEstimate large = mc_estimate(c, 80000, 3);
  const double ratio = small.mean.std_error / large.mean.std_error;
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.7);
}

TEST_CASE("mc input validation") {
  CHECK_THROWS_AS(mc_estimate(counts({{1, 0}, {1, 1}}), 1000, 0), ZeroCellError);
  CHECK_THROWS_AS(mc_estimate(counts({{1, 1}, {1, 1}}), 99, 0), ValidationError);
  const McEstimate line = mc_estimate(counts({{1, 2, 3}}), 100, 0);
  CHECK(line.mean.value == 0.0);
  CHECK(line.max_sample == 0.0);
}
