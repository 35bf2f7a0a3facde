#pragma once

#include "mipost/table.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace mipost::testing {

inline PosteriorCounts counts(std::initializer_list<std::initializer_list<double>> rows) {
  return PosteriorCounts::from_parameters(Matrix::from_rows(rows));
}

inline PosteriorCounts uniform_counts(std::size_t r, std::size_t s, double c) {
  return PosteriorCounts::from_parameters(Matrix(r, s, c));
}

/// Strictly positive table, 2..max_dim per side, entries in [0.5, 60).
inline PosteriorCounts random_positive(std::mt19937_64& rng, std::size_t max_dim = 5) {
  std::uniform_int_distribution<std::size_t> dim(2, max_dim);
  std::uniform_real_distribution<double> val(0.5, 60.0);
  Matrix m(dim(rng), dim(rng));
  for (double& v : m.values()) v = val(rng);
  return PosteriorCounts::from_parameters(std::move(m));
}

inline PosteriorCounts permuted(const PosteriorCounts& c, const std::vector<std::size_t>& rows,
                                const std::vector<std::size_t>& cols) {
  Matrix m(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) m(i, j) = c(rows[i], cols[j]);
  }
  return PosteriorCounts::from_parameters(std::move(m));
}

inline std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-300) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

}  // namespace mipost::testing
