#pragma once

#include "mipost/table.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mipost {

/// Plug-in statistics of the log dependence ratio
///   l_ij = log(n_ij n / (n_i+ n_+j))
/// under the posterior mean pi_ij = n_ij / n. All are O(1) in the counts.
struct PointStats {
  double plug_in_mi = 0.0;          ///< J = sum pi l = I(pi_hat)
  double log_ratio_sq = 0.0;        ///< K = sum pi l^2
  double log_ratio_cube = 0.0;      ///< L = sum pi l^3
  double inverse_count_term = 0.0;  ///< M = sum (1/n_ij - 1/n_i+ - 1/n_+j + 1/n) n_ij l
  double marginal_term = 0.0;       ///< P = sum_i n J_i+^2 / n_i+ + sum_j n J_+j^2 / n_+j
  double concentration_term = 0.0;  ///< Q = 1 - sum n_ij^2 / (n_i+ n_+j)
  /// K - J^2, accumulated as sum pi (l - J)^2 so it is never negative.
  double log_ratio_var = 0.0;
  std::vector<double> row_mi;  ///< J_i+ = sum_j pi_ij l_ij
  std::vector<double> col_mi;  ///< J_+j = sum_i pi_ij l_ij
  /// M and P are NaN when some posterior cell is zero; this says why.
  std::optional<std::string> diagnostic;
};

/// Mutual information (nats) of a joint probability matrix. Zero cells
/// contribute nothing. Entries must be >= 0 and sum to 1 within 1e-9.
double point_mi(const Matrix& joint);

/// I_max = min(log r, log s).
double max_mutual_information(std::size_t rows, std::size_t cols);

PointStats point_stats(const PosteriorCounts& counts);

/// Posterior mean pi_hat_ij = n_ij / n.
Matrix posterior_mean(const PosteriorCounts& counts);

/// Exact E[I] under the Dirichlet posterior, via digamma at n+1 arguments.
double mean_exact(const PosteriorCounts& counts);

/// E[I] ~ J + (r-1)(s-1) / (2(n+1)).
double mean_o2(const PosteriorCounts& counts);

/// Var[I] ~ (K - J^2) / (n+1).
double var_o1(const PosteriorCounts& counts);

/// Var[I] through second order:
///   (K-J^2)/(n+1) + (M + (r-1)(s-1)(1/2 - J) - Q) / ((n+1)(n+2)).
/// Needs every cell positive (throws ZeroCellError otherwise). The result
/// is not clamped and can be negative far outside the validity regime.
double var_o2(const PosteriorCounts& counts);

/// Leading-order third central moment
///   (2/n^2)(2J^3 - 3KJ + L) + (3/n^2)(K + J^2 - P).
/// Needs every cell positive.
double central3(const PosteriorCounts& counts);

/// Leading-order fourth central moment 3 (K - J^2)^2 / n^2.
double central4(const PosteriorCounts& counts);

enum class VarianceOrder { first, second };

struct ShapeStats {
  double skewness = 0.0;
  double kurtosis = 0.0;
  VarianceOrder divisor = VarianceOrder::second;
};

/// Skewness and kurtosis from the leading-order central moments. Divides
/// by var_o2 when it is finite and positive, var_o1 otherwise. Throws
/// DegenerateError when the leading-order variance vanishes (independent
/// plug-in table, or r = 1 or s = 1).
ShapeStats skew_kurt(const PosteriorCounts& counts);

/// Dirichlet covariance Cov(pi_ij, pi_kl) = (pi_ij d_ik d_jl - pi_ij pi_kl) / (n+1)
/// as an (rs) x (rs) matrix indexed by i*s + j.
Matrix dirichlet_covariance(const PosteriorCounts& counts);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

/// Second-order mean and leading-order variance of I for an arbitrary
/// posterior, given its mean probabilities and (rs) x (rs) covariance.
/// Evaluates the two quadratic forms directly in O((rs)^2).
MeanVariance mean_var_from_cov(const Matrix& mean_probs, const Matrix& covariance);

struct ValidityReport {
  double rs_over_n = 0.0;
  bool single_row_or_column = false;
  /// K - J^2 vanishes: the leading-order variance and both leading-order
  /// higher central moments are identically zero.
  bool independence_degenerate = false;
  bool zero_cells = false;
  /// var_o2 came out negative (second-order term swamps the leading one).
  bool variance_negative = false;
  std::vector<std::string> warnings;
};

struct MomentSummary {
  double mean_exact = 0.0;
  double mean_o2 = 0.0;
  double var_o1 = 0.0;
  std::optional<double> var_o2;
  std::optional<double> central3;
  double central4 = 0.0;
  std::optional<double> skewness;
  std::optional<double> kurtosis;
  double i_max = 0.0;
  ValidityReport validity;

  /// var_o2 when available and positive, var_o1 otherwise.
  double best_variance() const;
};

MomentSummary summarize(const PosteriorCounts& counts);

}  // namespace mipost
