#include "mipost/table.hpp"

#include "mipost/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mipost {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, TableFormat format) {
  std::vector<std::string_view> fields;
  if (format == TableFormat::csv) {
    std::size_t start = 0;
    while (true) {
      std::size_t end = line.find(',', start);
      if (end == std::string_view::npos) {
        fields.push_back(trim(line.substr(start)));
        break;
      }
      fields.push_back(trim(line.substr(start, end - start)));
      start = end + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      std::size_t begin = i;
      while (i < line.size() && !is_space(line[i])) ++i;
      if (i > begin) fields.push_back(line.substr(begin, i - begin));
    }
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t i, std::size_t j) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError("non-numeric entry '" + std::string(field) + "' at cell " + cell_label(i, j));
  }
  return value;
}

void check_entry(double value, std::size_t i, std::size_t j) {
  if (!std::isfinite(value)) {
    throw ValidationError("non-finite entry at cell " + cell_label(i, j));
  }
  if (value < 0.0) {
    throw ValidationError("negative entry at cell " + cell_label(i, j));
  }
}

Matrix parse_delimited(std::string_view text, TableFormat format) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  for (std::string_view line : split_lines(text)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, format);
    if (rows == 0) {
      cols = fields.size();
    } else if (fields.size() != cols) {
      throw FormatError("ragged rows: row " + std::to_string(rows + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      values.push_back(parse_number(fields[j], rows, j));
    }
    ++rows;
  }
  if (rows == 0) throw ValidationError("empty grid");
  return Matrix(rows, cols, std::move(values));
}

Matrix parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("JSON table must be an array of arrays");
  if (doc.empty()) throw ValidationError("empty grid");
  std::vector<double> values;
  std::size_t cols = 0;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& row = doc[i];
    if (!row.is_array()) throw FormatError("JSON row " + std::to_string(i + 1) + " is not an array");
    if (i == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw FormatError("ragged rows: row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j].is_number()) throw ValidationError("non-numeric entry at cell " + cell_label(i, j));
      values.push_back(row[j].get<double>());
    }
  }
  if (cols == 0) throw ValidationError("empty grid");
  return Matrix(doc.size(), cols, std::move(values));
}

void validate_grid(const Matrix& grid, const char* what) {
  if (grid.empty()) throw ValidationError(std::string(what) + ": empty grid");
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) check_entry(grid(i, j), i, j);
  }
}

}  // namespace

TableFormat parse_table_format(std::string_view name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "tsv") return TableFormat::tsv;
  if (name == "json") return TableFormat::json;
  throw std::invalid_argument("unknown table format: " + std::string(name));
}

std::string_view to_string(TableFormat format) {
  switch (format) {
    case TableFormat::csv: return "csv";
    case TableFormat::tsv: return "tsv";
    case TableFormat::json: return "json";
  }
  return "?";
}

std::string cell_label(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("matrix shape " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                " does not match " + std::to_string(values_.size()) + " entries");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  for (const auto& row : rows) {
    if (row.size() != cols) throw std::invalid_argument("ragged initializer rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(rows.size(), cols, std::move(values));
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

// ---------------------------------------------------------------------------
// CountsTable

CountsTable::CountsTable(Matrix counts) : counts_(std::move(counts)) {
  validate_grid(counts_, "counts table");
  bool any_positive = false;
  for (double v : counts_.values()) any_positive = any_positive || v > 0.0;
  if (!any_positive) throw ValidationError("counts table has no positive entry");
}

// ---------------------------------------------------------------------------
// PriorSpec

PriorKind parse_prior_kind(std::string_view name) {
  if (name == "haldane") return PriorKind::haldane;
  if (name == "perks") return PriorKind::perks;
  if (name == "jeffreys") return PriorKind::jeffreys;
  if (name == "uniform") return PriorKind::uniform;
  if (name == "custom") return PriorKind::custom;
  throw std::invalid_argument("unknown prior: " + std::string(name));
}

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::haldane: return "haldane";
    case PriorKind::perks: return "perks";
    case PriorKind::jeffreys: return "jeffreys";
    case PriorKind::uniform: return "uniform";
    case PriorKind::custom: return "custom";
  }
  return "?";
}

PriorSpec PriorSpec::named(PriorKind kind) {
  if (kind == PriorKind::custom) throw std::invalid_argument("custom prior needs a pseudo-count matrix");
  PriorSpec p;
  p.kind_ = kind;
  return p;
}

PriorSpec PriorSpec::custom(Matrix pseudo_counts) {
  validate_grid(pseudo_counts, "custom prior");
  PriorSpec p;
  p.kind_ = PriorKind::custom;
  p.custom_ = std::move(pseudo_counts);
  return p;
}

double PriorSpec::pseudo_count(std::size_t rows, std::size_t cols) const {
  switch (kind_) {
    case PriorKind::haldane: return 0.0;
    case PriorKind::perks: return 1.0 / static_cast<double>(rows * cols);
    case PriorKind::jeffreys: return 0.5;
    case PriorKind::uniform: return 1.0;
    case PriorKind::custom: break;
  }
  throw std::logic_error("custom prior has no constant pseudo-count");
}

Matrix PriorSpec::pseudo_counts(std::size_t rows, std::size_t cols) const {
  if (kind_ != PriorKind::custom) return Matrix(rows, cols, pseudo_count(rows, cols));
  if (custom_->rows() != rows || custom_->cols() != cols) {
    throw ValidationError("custom prior is " + std::to_string(custom_->rows()) + "x" +
                          std::to_string(custom_->cols()) + " but the table is " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  return *custom_;
}

// ---------------------------------------------------------------------------
// PosteriorCounts

PosteriorCounts::PosteriorCounts(Matrix parameters)
    : params_(std::move(parameters)), row_sums_(params_.rows(), 0.0), col_sums_(params_.cols(), 0.0) {
  all_positive_ = true;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      double v = params_(i, j);
      row_sums_[i] += v;
      col_sums_[j] += v;
      total_ += v;
      all_positive_ = all_positive_ && v > 0.0;
    }
  }
}

PosteriorCounts PosteriorCounts::from_parameters(Matrix parameters) {
  validate_grid(parameters, "posterior parameters");
  PosteriorCounts c(std::move(parameters));
  if (!(c.total_ > 0.0)) throw ValidationError("posterior parameters sum to zero");
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> PosteriorCounts::zero_cells() const {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      if (params_(i, j) <= 0.0) cells.emplace_back(i, j);
    }
  }
  return cells;
}

PosteriorCounts PosteriorCounts::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  Matrix m = params_;
  for (double& v : m.values()) v *= factor;
  return from_parameters(std::move(m));
}

PosteriorCounts PosteriorCounts::transposed() const { return from_parameters(params_.transposed()); }

PosteriorCounts apply_prior(const CountsTable& table, const PriorSpec& prior) {
  Matrix pseudo = prior.pseudo_counts(table.rows(), table.cols());
  Matrix params = table.matrix();
  auto out = params.values();
  auto add = pseudo.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (add[k] != 0.0) out[k] += add[k];
  }
  return PosteriorCounts::from_parameters(std::move(params));
}

// ---------------------------------------------------------------------------
// I/O

Matrix parse_matrix(std::string_view text, TableFormat format) {
  Matrix grid = format == TableFormat::json ? parse_json(text) : parse_delimited(text, format);
  validate_grid(grid, "table");
  return grid;
}

CountsTable parse_table(std::string_view text, TableFormat format) {
  return CountsTable(parse_matrix(text, format));
}

std::string serialize_table(const Matrix& grid, TableFormat format) {
  auto number = [](double v) {
    char buf[32];
    int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
  };
  std::ostringstream out;
  if (format == TableFormat::json) out << '[';
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    if (format == TableFormat::json) out << (i ? ",[" : "[");
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (j) out << (format == TableFormat::tsv ? "\t" : ",");
      out << number(grid(i, j));
    }
    if (format == TableFormat::json) {
      out << ']';
    } else {
      out << '\n';
    }
  }
  if (format == TableFormat::json) out << "]\n";
  return out.str();
}

}  // namespace mipost
