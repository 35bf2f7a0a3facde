#include "mipost/moments.hpp"

#include "mipost/error.hpp"
#include "mipost/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mipost {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log-ratio spread below this is rounding noise of an exactly independent table
constexpr double kDegenerateSpread = 1e-24;

bool single_row_or_column(const PosteriorCounts& c) { return c.rows() == 1 || c.cols() == 1; }

double log_ratio(const PosteriorCounts& c, std::size_t i, std::size_t j) {
  return std::log((c(i, j) * c.total()) / (c.row_sum(i) * c.col_sum(j)));
}

double dof_product(const PosteriorCounts& c) {
  return static_cast<double>(c.rows() - 1) * static_cast<double>(c.cols() - 1);
}

std::string zero_cell_message(const PosteriorCounts& c, const char* op) {
  std::string msg = std::string(op) + " needs every posterior cell positive; zero cells:";
  for (auto [i, j] : c.zero_cells()) msg += " " + cell_label(i, j);
  msg += ". Use a positive prior (e.g. jeffreys) or first-order moments.";
  return msg;
}

void require_all_positive(const PosteriorCounts& c, const char* op) {
  if (!c.all_positive()) throw ZeroCellError(zero_cell_message(c, op));
}

}  // namespace

double max_mutual_information(std::size_t rows, std::size_t cols) {
  return std::min(std::log(static_cast<double>(rows)), std::log(static_cast<double>(cols)));
}

double point_mi(const Matrix& joint) {
  if (joint.empty()) throw std::invalid_argument("point_mi: empty matrix");
  double total = 0.0;
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      double v = joint(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("point_mi: invalid probability at cell " + cell_label(i, j));
      }
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("point_mi: probabilities sum to " + std::to_string(total));
  }
  if (joint.rows() == 1 || joint.cols() == 1) return 0.0;
  std::vector<double> row(joint.rows(), 0.0), col(joint.cols(), 0.0);
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      row[i] += joint(i, j);
      col[j] += joint(i, j);
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      double v = joint(i, j);
      if (v > 0.0) mi += v * std::log(v / (row[i] * col[j]));
    }
  }
  return std::max(mi, 0.0);
}

Matrix posterior_mean(const PosteriorCounts& c) {
  Matrix q = c.matrix();
  for (double& v : q.values()) v /= c.total();
  return q;
}

PointStats point_stats(const PosteriorCounts& c) {
  const std::size_t r = c.rows();
  const std::size_t s = c.cols();
  const double n = c.total();
  PointStats st;
  st.row_mi.assign(r, 0.0);
  st.col_mi.assign(s, 0.0);

  double sq_sum = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double nij = c(i, j);
      if (nij > 0.0) sq_sum += nij * nij / (c.row_sum(i) * c.col_sum(j));
      if (nij <= 0.0) continue;
      const double p = nij / n;
      const double l = log_ratio(c, i, j);
      const double pl = p * l;
      st.plug_in_mi += pl;
      st.log_ratio_sq += pl * l;
      st.log_ratio_cube += pl * l * l;
      st.row_mi[i] += pl;
      st.col_mi[j] += pl;
    }
  }
  st.concentration_term = 1.0 - sq_sum;

  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (c(i, j) <= 0.0) continue;
      const double d = log_ratio(c, i, j) - st.plug_in_mi;
      st.log_ratio_var += c(i, j) / n * d * d;
    }
  }

  if (!c.all_positive()) {
    st.inverse_count_term = kNaN;
    st.marginal_term = kNaN;
    st.diagnostic = zero_cell_message(c, "M and P");
    return st;
  }

  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double nij = c(i, j);
      const double weight = 1.0 / nij - 1.0 / c.row_sum(i) - 1.0 / c.col_sum(j) + 1.0 / n;
      st.inverse_count_term += weight * nij * log_ratio(c, i, j);
    }
  }
  for (std::size_t i = 0; i < r; ++i) st.marginal_term += n * st.row_mi[i] * st.row_mi[i] / c.row_sum(i);
  for (std::size_t j = 0; j < s; ++j) st.marginal_term += n * st.col_mi[j] * st.col_mi[j] / c.col_sum(j);
  return st;
}

double mean_exact(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  const double n = c.total();
  std::vector<double> psi_row(c.rows()), psi_col(c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) psi_row[i] = digamma_lookup(c.row_sum(i) + 1.0);
  for (std::size_t j = 0; j < c.cols(); ++j) psi_col[j] = digamma_lookup(c.col_sum(j) + 1.0);
  const double psi_total = digamma_lookup(n + 1.0);

  double sum = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const double nij = c(i, j);
      if (nij <= 0.0) continue;
      sum += nij * (digamma_lookup(nij + 1.0) - psi_row[i] - psi_col[j] + psi_total);
    }
  }
  return sum / n;
}

double mean_o2(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  return point_stats(c).plug_in_mi + dof_product(c) / (2.0 * (c.total() + 1.0));
}

double var_o1(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  return point_stats(c).log_ratio_var / (c.total() + 1.0);
}

double var_o2(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  require_all_positive(c, "second-order variance");
  const PointStats st = point_stats(c);
  const double n = c.total();
  const double second = st.inverse_count_term + dof_product(c) * (0.5 - st.plug_in_mi) - st.concentration_term;
  return st.log_ratio_var / (n + 1.0) + second / ((n + 1.0) * (n + 2.0));
}

double central3(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  require_all_positive(c, "third central moment");
  const PointStats st = point_stats(c);
  const double n2 = c.total() * c.total();
  const double J = st.plug_in_mi;
  const double K = st.log_ratio_sq;
  return 2.0 / n2 * (2.0 * J * J * J - 3.0 * K * J + st.log_ratio_cube) +
         3.0 / n2 * (K + J * J - st.marginal_term);
}

double central4(const PosteriorCounts& c) {
  if (single_row_or_column(c)) return 0.0;
  const double spread = point_stats(c).log_ratio_var;
  return 3.0 * spread * spread / (c.total() * c.total());
}

ShapeStats skew_kurt(const PosteriorCounts& c) {
  if (single_row_or_column(c)) throw DegenerateError("skewness/kurtosis undefined: I is identically zero");
  if (point_stats(c).log_ratio_var <= kDegenerateSpread) {
    throw DegenerateError("skewness/kurtosis undefined: leading-order variance vanishes (independent table)");
  }
  const double third = central3(c);
  ShapeStats out;
  double variance = var_o2(c);
  if (!(std::isfinite(variance) && variance > 0.0)) {
    variance = var_o1(c);
    out.divisor = VarianceOrder::first;
  }
  out.skewness = third / std::pow(variance, 1.5);
  out.kurtosis = central4(c) / (variance * variance);
  return out;
}

Matrix dirichlet_covariance(const PosteriorCounts& c) {
  const std::size_t cells = c.rows() * c.cols();
  const Matrix q = posterior_mean(c);
  const auto p = q.values();
  const double scale = 1.0 / (c.total() + 1.0);
  Matrix cov(cells, cells);
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = 0; b < cells; ++b) {
      cov(a, b) = scale * ((a == b ? p[a] : 0.0) - p[a] * p[b]);
    }
  }
  return cov;
}

MeanVariance mean_var_from_cov(const Matrix& q, const Matrix& cov) {
  const std::size_t r = q.rows();
  const std::size_t s = q.cols();
  const std::size_t cells = r * s;
  if (cov.rows() != cells || cov.cols() != cells) {
    throw std::invalid_argument("mean_var_from_cov: covariance must be (rs)x(rs)");
  }
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (!(q(i, j) > 0.0)) throw ZeroCellError("mean_var_from_cov: zero probability at cell " + cell_label(i, j));
    }
  }
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = a + 1; b < cells; ++b) {
      const double tol = 1e-12 * std::max({std::abs(cov(a, b)), std::abs(cov(b, a)), 1e-300});
      if (std::abs(cov(a, b) - cov(b, a)) > tol) {
        throw std::invalid_argument("mean_var_from_cov: covariance is not symmetric");
      }
    }
  }

  std::vector<double> row(r, 0.0), col(s, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      row[i] += q(i, j);
      col[j] += q(i, j);
    }
  }
  std::vector<double> ratio(cells);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) ratio[i * s + j] = std::log(q(i, j) / (row[i] * col[j]));
  }

  MeanVariance out;
  out.mean = point_mi(q);
  double curvature = 0.0;
  double variance = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t a = i * s + j;
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t l = 0; l < s; ++l) {
          const std::size_t b = k * s + l;
          double kernel = 0.0;
          if (i == k && j == l) kernel += 1.0 / q(i, j);
          if (i == k) kernel -= 1.0 / row[i];
          if (j == l) kernel -= 1.0 / col[j];
          curvature += kernel * cov(a, b);
          variance += ratio[a] * ratio[b] * cov(a, b);
        }
      }
    }
  }
  out.mean += 0.5 * curvature;
  out.variance = variance;
  return out;
}

double MomentSummary::best_variance() const {
  if (var_o2 && std::isfinite(*var_o2) && *var_o2 > 0.0) return *var_o2;
  return var_o1;
}

MomentSummary summarize(const PosteriorCounts& c) {
  MomentSummary m;
  m.i_max = max_mutual_information(c.rows(), c.cols());
  auto& v = m.validity;
  v.rs_over_n = static_cast<double>(c.rows() * c.cols()) / c.total();
  v.zero_cells = !c.all_positive();

  if (single_row_or_column(c)) {
    v.single_row_or_column = true;
    v.independence_degenerate = true;
    m.var_o2 = 0.0;
    m.central3 = 0.0;
    v.warnings.emplace_back("single row or column: mutual information is identically zero");
    return m;
  }

  const PointStats st = point_stats(c);
  v.independence_degenerate = st.log_ratio_var <= kDegenerateSpread;
  m.mean_exact = mean_exact(c);
  m.mean_o2 = mean_o2(c);
  m.var_o1 = var_o1(c);
  m.central4 = central4(c);

  if (c.all_positive()) {
    m.var_o2 = var_o2(c);
    m.central3 = central3(c);
    if (*m.var_o2 < 0.0) {
      v.variance_negative = true;
      v.warnings.emplace_back("second-order variance is negative: counts too small for the expansion (rs/n = " +
                              std::to_string(v.rs_over_n) + ")");
    }
  } else {
    v.warnings.push_back(zero_cell_message(c, "second-order variance and third central moment"));
  }

  if (v.independence_degenerate) {
    v.warnings.emplace_back("plug-in table is independent: leading-order skewness and kurtosis are degenerate");
  } else if (c.all_positive()) {
    const ShapeStats shape = skew_kurt(c);
    m.skewness = shape.skewness;
    m.kurtosis = shape.kurtosis;
  }
  if (v.rs_over_n > 1.0) {
    v.warnings.emplace_back("rs/n > 1: moment expansions are outside their validity range");
  }
  return m;
}

}  // namespace mipost
