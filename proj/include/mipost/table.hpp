#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mipost {

enum class TableFormat { csv, tsv, json };

TableFormat parse_table_format(std::string_view name);
std::string_view to_string(TableFormat format);

/// Dense row-major matrix of reals. Used for count grids, probability
/// matrices and prior pseudo-counts alike.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Observed counts n'_ij of an r x s contingency table. Entries are
/// non-negative reals and at least one is positive.
class CountsTable {
public:
  explicit CountsTable(Matrix counts);

  std::size_t rows() const noexcept { return counts_.rows(); }
  std::size_t cols() const noexcept { return counts_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return counts_(i, j); }
  const Matrix& matrix() const noexcept { return counts_; }

private:
  Matrix counts_;
};

enum class PriorKind { haldane, perks, jeffreys, uniform, custom };

PriorKind parse_prior_kind(std::string_view name);
std::string_view to_string(PriorKind kind);

/// Dirichlet prior pseudo-counts n''_ij. Named kinds add the same constant
/// to every cell; custom carries a full matrix.
class PriorSpec {
public:
  static PriorSpec named(PriorKind kind);
  static PriorSpec custom(Matrix pseudo_counts);

  PriorKind kind() const noexcept { return kind_; }
  const std::optional<Matrix>& custom_matrix() const noexcept { return custom_; }

  /// Per-cell constant of a named kind for an r x s table.
  double pseudo_count(std::size_t rows, std::size_t cols) const;
  Matrix pseudo_counts(std::size_t rows, std::size_t cols) const;

private:
  PriorKind kind_ = PriorKind::haldane;
  std::optional<Matrix> custom_;
};

/// Dirichlet posterior parameters n_ij with cached marginals. Immutable.
class PosteriorCounts {
public:
  /// Takes the parameters as they are; entries must be finite and >= 0
  /// with a positive total.
  static PosteriorCounts from_parameters(Matrix parameters);

  std::size_t rows() const noexcept { return params_.rows(); }
  std::size_t cols() const noexcept { return params_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return params_(i, j); }
  const Matrix& matrix() const noexcept { return params_; }

  double row_sum(std::size_t i) const { return row_sums_[i]; }
  double col_sum(std::size_t j) const { return col_sums_[j]; }
  std::span<const double> row_sums() const noexcept { return row_sums_; }
  std::span<const double> col_sums() const noexcept { return col_sums_; }
  double total() const noexcept { return total_; }
  bool all_positive() const noexcept { return all_positive_; }

  std::vector<std::pair<std::size_t, std::size_t>> zero_cells() const;

  PosteriorCounts scaled(double factor) const;
  PosteriorCounts transposed() const;

private:
  explicit PosteriorCounts(Matrix parameters);

  Matrix params_;
  std::vector<double> row_sums_;
  std::vector<double> col_sums_;
  double total_ = 0.0;
  bool all_positive_ = false;
};

PosteriorCounts apply_prior(const CountsTable& table, const PriorSpec& prior);

/// Parses a rectangular numeric grid. CSV splits on commas, TSV on any run
/// of whitespace, JSON expects an array of arrays of numbers. Blank lines
/// are skipped.
Matrix parse_matrix(std::string_view text, TableFormat format);
CountsTable parse_table(std::string_view text, TableFormat format);

/// Emits every entry with 17 significant digits so parsing round-trips.
std::string serialize_table(const Matrix& grid, TableFormat format);

/// Human-readable cell label, e.g. "(2,1)" using 1-based indices.
std::string cell_label(std::size_t i, std::size_t j);

}  // namespace mipost
