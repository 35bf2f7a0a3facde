#pragma once

#include "mipost/moments.hpp"

#include <array>
#include <limits>
#include <optional>
#include <string_view>
#include <variant>

namespace mipost {

enum class Family { normal, gamma, lognormal, poly_ansatz };

Family parse_family(std::string_view name);
std::string_view to_string(Family family);

struct NormalParams {
  double mean = 0.0;
  double variance = 1.0;
};

struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

struct LognormalParams {
  double log_mean = 0.0;
  double log_variance = 1.0;
};

/// Density (1 + linear x + quadratic x^2) p0(x) / normalization, where p0
/// is a normal or gamma density with the given mean and variance.
struct PolyAnsatzParams {
  double linear = 0.0;
  double quadratic = 0.0;
  Family base = Family::gamma;
  double base_mean = 0.0;
  double base_variance = 1.0;
  double normalization = 1.0;  ///< 1 + linear g1 + quadratic g2
};

using FitParams = std::variant<NormalParams, GammaParams, LognormalParams, PolyAnsatzParams>;

struct FitDiagnostics {
  int iterations = 0;
  /// Largest relative per-moment mismatch of the fitted raw moments.
  double residual = 0.0;
  bool density_nonnegative = true;
  /// Minimum of the modulating polynomial on the check grid.
  double min_modulation = 1.0;
  /// Fitted mass above I_max; NaN when no support bound was given.
  double mass_above_support = std::numeric_limits<double>::quiet_NaN();
  /// Starting points tried before acceptance (1: the unmodulated base).
  int starts = 1;
};

struct FitResult {
  FitParams params;
  std::array<double, 4> moments_achieved{};  ///< E[X], E[X^2], E[X^3], E[X^4]
  FitDiagnostics diagnostics;

  Family family() const;
};

/// Closed-form two-moment inversion for normal, gamma and lognormal.
FitResult fit_two_moment(double mean, double variance, Family family,
                         double support_max = std::numeric_limits<double>::quiet_NaN());

struct AnsatzOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;
  /// Upper end of the non-negativity grid (I_max). NaN: mean + 10 sd.
  double support_max = std::numeric_limits<double>::quiet_NaN();
};

/// Fits (linear, quadratic, base mean, base variance) so the modulated
/// density reproduces the four raw moments. Damped Newton with a
/// finite-difference Jacobian from the unmodulated base, then from a fixed
/// grid of modulators. Among converged roots the non-negative one with the
/// smallest modulation wins.
///
/// Throws ValidationError for an invalid moment sequence and
/// ConvergenceError when the budget runs out. A negative density is not
/// an error: it is reported in the diagnostics.
FitResult fit_poly_ansatz(const std::array<double, 4>& raw_moments, Family base, const AnsatzOptions& options = {});

/// Raw moments E[X^k], k = 1..4, from mean, variance and central moments.
std::array<double, 4> raw_from_central(double mean, double variance, double central3, double central4);

/// Four-moment input for the ansatz: exact mean, best variance and the
/// leading-order central moments. When the leading order is degenerate
/// (independent plug-in table) the central moments vanish identically and
/// the Gaussian closure central3 = 0, central4 = 3 Var^2 is used instead.
/// `variance` overrides best_variance(). Throws ZeroCellError or
/// DegenerateError when the third moment is unavailable.
std::array<double, 4> ansatz_input(const MomentSummary& summary, std::optional<double> variance = std::nullopt);

/// True when 1, m1..m4 form a strictly positive definite Hankel matrix.
bool is_valid_moment_sequence(const std::array<double, 4>& raw_moments);

double fitted_mean(const FitResult& fit);
double fitted_variance(const FitResult& fit);

double density(const FitResult& fit, double x);

/// p(I > i_star) in closed form: standard upper-tail functions, and base
/// partial moments for the ansatz.
double survival(const FitResult& fit, double i_star);

/// The same tail mass by adaptive quadrature of density().
double survival_by_quadrature(const FitResult& fit, double i_star);

}  // namespace mipost
