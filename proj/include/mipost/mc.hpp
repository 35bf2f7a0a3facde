#pragma once

#include "mipost/table.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mipost {

/// Number of batch means behind every Monte Carlo standard error. Batch k
/// draws from its own sub-stream keyed by (seed, k).
inline constexpr std::size_t kMcBatches = 32;
inline constexpr std::size_t kMcHistogramBins = 128;
inline constexpr std::size_t kMcMinSamples = 100;

using McEngine = std::mt19937_64;

/// Engine for sub-stream `stream` of `seed`.
McEngine make_substream(std::uint64_t seed, std::uint64_t stream);

/// Gamma(shape, 1) variate, shape > 0, returned as its logarithm so that
/// tiny shapes cannot underflow. Marsaglia-Tsang squeeze for shape >= 1;
/// shape < 1 is boosted through Gamma(shape + 1) * U^(1/shape).
double sample_log_gamma(double shape, McEngine& engine);

/// One draw pi ~ Dirichlet(n_ij) via normalised Gamma variates. Needs every
/// cell positive (ZeroCellError otherwise).
Matrix sample_dirichlet(const PosteriorCounts& counts, McEngine& engine);

struct McMoment {
  double value = 0.0;
  double std_error = 0.0;
};

struct TailFrequency {
  double threshold = 0.0;
  double frequency = 0.0;
  double std_error = 0.0;
};

struct McEstimate {
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  McMoment mean;
  McMoment variance;
  McMoment skewness;
  McMoment kurtosis;
  std::vector<TailFrequency> tails;
  std::vector<double> bin_edges;  ///< kMcHistogramBins + 1 edges on [0, I_max]
  std::vector<std::size_t> bin_counts;
  double i_max = 0.0;
  double max_sample = 0.0;
};

/// Empirical distribution of I(pi) for N posterior draws. Results depend
/// only on (counts, N, seed, thresholds): `workers` changes wall time, not
/// output. workers = 0 picks the hardware concurrency.
McEstimate mc_estimate(const PosteriorCounts& counts, std::size_t samples, std::uint64_t seed,
                       std::span<const double> thresholds = {}, unsigned workers = 1);

/// Raw samples of I(pi) in batch order; exposed for diagnostics and tests.
std::vector<double> mc_samples(const PosteriorCounts& counts, std::size_t samples, std::uint64_t seed,
                               unsigned workers = 1);

}  // namespace mipost
