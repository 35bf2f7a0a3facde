#include "mipost/mc.hpp"

#include "mipost/error.hpp"
#include "mipost/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace mipost {

namespace {

// Uniform on the open interval (0, 1) from the top 53 bits.
double open_uniform(McEngine& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(McEngine& engine) {
  const double u1 = open_uniform(engine);
  const double u2 = open_uniform(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double log_gamma_at_least_one(double shape, McEngine& engine) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = standard_normal(engine);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = open_uniform(engine);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

// Mutual information of a sampled joint distribution; pi sums to 1.
double sample_mi(std::span<const double> pi, std::size_t rows, std::size_t cols, std::vector<double>& row,
                 std::vector<double>& col) {
  if (rows == 1 || cols == 1) return 0.0;
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      row[i] += pi[i * cols + j];
      col[j] += pi[i * cols + j];
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double p = pi[i * cols + j];
      if (p > 0.0) mi += p * std::log(p / (row[i] * col[j]));
    }
  }
  return std::max(mi, 0.0);
}

void draw_dirichlet(const PosteriorCounts& c, McEngine& engine, std::span<double> out) {
  const auto params = c.matrix().values();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < params.size(); ++k) {
    out[k] = sample_log_gamma(params[k], engine);
    top = std::max(top, out[k]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : out) v /= total;
}

void require_positive(const PosteriorCounts& c) {
  if (c.all_positive()) return;
  std::string msg = "Dirichlet sampling needs every posterior cell positive; zero cells:";
  for (auto [i, j] : c.zero_cells()) msg += " " + cell_label(i, j);
  throw ZeroCellError(msg);
}

struct BatchRange {
  std::size_t begin;
  std::size_t end;
};

std::vector<BatchRange> batch_ranges(std::size_t samples) {
  std::vector<BatchRange> ranges;
  const std::size_t base = samples / kMcBatches;
  const std::size_t extra = samples % kMcBatches;
  std::size_t at = 0;
  for (std::size_t b = 0; b < kMcBatches; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    ranges.push_back({at, at + len});
    at += len;
  }
  return ranges;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

// Bias-uncorrected sample moments, two passes in index order.
SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  const double count = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / count;
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  m.variance = s2 / count;
  if (m.variance > 0.0) {
    m.skewness = (s3 / count) / std::pow(m.variance, 1.5);
    m.kurtosis = (s4 / count) / (m.variance * m.variance);
  }
  return m;
}

double batch_std_error(const std::vector<double>& values) {
  const double count = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= count;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (count - 1.0) / count);
}

}  // namespace

McEngine make_substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6d69706fU};
  return McEngine(seq);
}

double sample_log_gamma(double shape, McEngine& engine) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw DomainError("gamma shape must be positive, got " + std::to_string(shape));
  }
  if (shape >= 1.0) return log_gamma_at_least_one(shape, engine);
  const double boosted = log_gamma_at_least_one(shape + 1.0, engine);
  return boosted + std::log(open_uniform(engine)) / shape;
}

Matrix sample_dirichlet(const PosteriorCounts& c, McEngine& engine) {
  require_positive(c);
  Matrix pi(c.rows(), c.cols());
  draw_dirichlet(c, engine, pi.values());
  return pi;
}

std::vector<double> mc_samples(const PosteriorCounts& c, std::size_t samples, std::uint64_t seed,
                               unsigned workers) {
  require_positive(c);
  if (samples < kMcMinSamples) {
    throw ValidationError("Monte Carlo needs at least " + std::to_string(kMcMinSamples) + " samples");
  }
  std::vector<double> out(samples);
  const auto ranges = batch_ranges(samples);

  auto run_batch = [&](std::size_t b) {
    McEngine engine = make_substream(seed, b);
    std::vector<double> pi(c.rows() * c.cols());
    std::vector<double> row(c.rows()), col(c.cols());
    for (std::size_t k = ranges[b].begin; k < ranges[b].end; ++k) {
      draw_dirichlet(c, engine, pi);
      out[k] = sample_mi(pi, c.rows(), c.cols(), row, col);
    }
  };

  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, kMcBatches);
  if (workers == 1) {
    for (std::size_t b = 0; b < kMcBatches; ++b) run_batch(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < kMcBatches; b += workers) run_batch(b);
      });
    }
  }
  return out;
}

McEstimate mc_estimate(const PosteriorCounts& c, std::size_t samples, std::uint64_t seed,
                       std::span<const double> thresholds, unsigned workers) {
  const std::vector<double> xs = mc_samples(c, samples, seed, workers);
  const auto ranges = batch_ranges(samples);

  McEstimate est;
  est.sample_count = samples;
  est.seed = seed;
  est.i_max = max_mutual_information(c.rows(), c.cols());

  const SampleMoments all = sample_moments(xs);
  std::vector<double> means, variances, skews, kurts;
  for (const auto& r : ranges) {
    const SampleMoments m = sample_moments(std::span<const double>(xs).subspan(r.begin, r.end - r.begin));
    means.push_back(m.mean);
    variances.push_back(m.variance);
    skews.push_back(m.skewness);
    kurts.push_back(m.kurtosis);
  }
  est.mean = {all.mean, batch_std_error(means)};
  est.variance = {all.variance, batch_std_error(variances)};
  est.skewness = {all.skewness, batch_std_error(skews)};
  est.kurtosis = {all.kurtosis, batch_std_error(kurts)};

  for (double t : thresholds) {
    std::vector<double> per_batch;
    std::size_t above = 0;
    for (const auto& r : ranges) {
      std::size_t hits = 0;
      for (std::size_t k = r.begin; k < r.end; ++k) hits += xs[k] > t ? 1 : 0;
      above += hits;
      per_batch.push_back(static_cast<double>(hits) / static_cast<double>(r.end - r.begin));
    }
    est.tails.push_back({t, static_cast<double>(above) / static_cast<double>(samples), batch_std_error(per_batch)});
  }

  est.bin_edges.resize(kMcHistogramBins + 1);
  for (std::size_t b = 0; b <= kMcHistogramBins; ++b) {
    est.bin_edges[b] = est.i_max * static_cast<double>(b) / static_cast<double>(kMcHistogramBins);
  }
  est.bin_counts.assign(kMcHistogramBins, 0);
  for (double x : xs) {
    std::size_t bin = 0;
    if (est.i_max > 0.0) {
      const double pos = x / est.i_max * static_cast<double>(kMcHistogramBins);
      bin = std::min(static_cast<std::size_t>(std::max(pos, 0.0)), kMcHistogramBins - 1);
    }
    ++est.bin_counts[bin];
    est.max_sample = std::max(est.max_sample, x);
  }
  return est;
}

}  // namespace mipost
