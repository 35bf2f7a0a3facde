#include "mipost/fit.hpp"

#include "mipost/error.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace mipost {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kGridPoints = 1024;

// Raw moments g_0..g_6 of a base density with the given mean and variance.
using BaseMoments = std::array<double, 7>;

bool base_params_valid(Family base, double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) return false;
  return base != Family::gamma || mean > 0.0;
}

BaseMoments base_moments(Family base, double mean, double variance) {
  BaseMoments g{};
  g[0] = 1.0;
  if (base == Family::normal) {
    g[1] = mean;
    for (int k = 2; k < 7; ++k) g[k] = mean * g[k - 1] + (k - 1) * variance * g[k - 2];
  } else {
    const double shape = mean * mean / variance;
    const double scale = variance / mean;
    for (int k = 1; k < 7; ++k) g[k] = g[k - 1] * scale * (shape + (k - 1));
  }
  return g;
}

// Standardised central moments E[z^j], j = 0..6, of the base density.
using StdMoments = std::array<double, 7>;

StdMoments standard_moments(Family base, double mean, double variance) {
  if (base == Family::normal) return {1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0};
  const double k = mean * mean / variance;
  const double rk = std::sqrt(k);
  return {1.0, 0.0, 1.0, 2.0 / rk, 3.0 + 6.0 / k, 20.0 / rk + 24.0 / (k * rk), 15.0 + 130.0 / k + 120.0 / (k * k)};
}

// Modulator written in the base's own standard coordinate z = (x - mean)/sd
// as 1 + beta z + gamma z^2. In these coordinates the normaliser is simply
// 1 + gamma, and beta is not degenerate with a mean shift away from zero.
struct AnsatzState {
  double beta = 0.0;
  double gamma = 0.0;
  double mean = 0.0;
  double variance = 1.0;

  Eigen::Vector4d vec() const { return {beta, gamma, mean, variance}; }
  static AnsatzState from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

// Coefficients a0 + a1 x + a2 x^2 of the modulator in the original variable.
std::array<double, 3> x_coefficients(const AnsatzState& s) {
  const double sd = std::sqrt(s.variance);
  const double u = s.mean / sd;
  return {1.0 - s.beta * u + s.gamma * u * u, (s.beta - 2.0 * s.gamma * u) / sd, s.gamma / s.variance};
}

bool state_valid(Family base, const AnsatzState& s) {
  if (!base_params_valid(base, s.mean, s.variance)) return false;
  if (!(1.0 + s.gamma > 0.0) || !std::isfinite(s.beta) || !std::isfinite(s.gamma)) return false;
  // a0 = 0 has no (1 + b x + c x^2) form.
  return std::abs(x_coefficients(s)[0]) > 1e-12;
}

std::array<double, 4> modulated_moments(Family base, const AnsatzState& s) {
  const StdMoments e = standard_moments(base, s.mean, s.variance);
  std::array<double, 5> w{1.0};
  for (int j = 1; j <= 4; ++j) w[j] = (e[j] + s.beta * e[j + 1] + s.gamma * e[j + 2]) / (1.0 + s.gamma);
  const double sd = std::sqrt(s.variance);
  std::array<double, 4> out{};
  for (int k = 1; k <= 4; ++k) {
    double sum = 0.0, binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      sum += binom * std::pow(s.mean, k - j) * std::pow(sd, j) * w[j];
      binom = binom * (k - j) / (j + 1);
    }
    out[k - 1] = sum;
  }
  return out;
}

Eigen::Vector4d residual(Family base, const AnsatzState& s, const std::array<double, 4>& target) {
  const auto mu = modulated_moments(base, s);
  Eigen::Vector4d r;
  for (int k = 0; k < 4; ++k) r[k] = (mu[k] - target[k]) / std::max(std::abs(target[k]), 1e-300);
  return r;
}

struct SolveOutcome {
  AnsatzState state;
  double residual = 0.0;
  int iterations = 0;
};

// Damped Newton on the relative moment residuals; stops at machine-level
// residual or when no damped step improves it.
SolveOutcome newton(Family base, AnsatzState start, const std::array<double, 4>& target, int budget) {
  Eigen::Vector4d r = residual(base, start, target);
  SolveOutcome out{start, r.lpNorm<Eigen::Infinity>(), 0};
  if (!std::isfinite(out.residual)) return out;
  AnsatzState cur = start;
  for (int it = 0; it < budget && out.residual > 1e-13; ++it) {
    out.iterations = it + 1;
    Eigen::Matrix4d jac;
    const Eigen::Vector4d x = cur.vec();
    bool jac_ok = true;
    for (int col = 0; col < 4; ++col) {
      double h = 1e-7 * std::max(1.0, std::abs(x[col]));
      if (col == 3) h = std::min(h, 0.5 * x[3]);
      Eigen::Vector4d xp = x, xm = x;
      xp[col] += h;
      xm[col] -= h;
      AnsatzState sp = AnsatzState::from(xp), sm = AnsatzState::from(xm);
      if (!state_valid(base, sp) || !state_valid(base, sm)) {
        jac_ok = false;
        break;
      }
      jac.col(col) = (residual(base, sp, target) - residual(base, sm, target)) / (2.0 * h);
    }
    if (!jac_ok) break;
    const Eigen::Vector4d step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;

    bool improved = false;
    for (double damping = 1.0; damping > 1e-10; damping *= 0.5) {
      AnsatzState trial = AnsatzState::from(x + damping * step);
      if (!state_valid(base, trial)) continue;
      Eigen::Vector4d rt = residual(base, trial, target);
      double norm = rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(norm) && norm < out.residual) {
        cur = trial;
        r = rt;
        out.residual = norm;
        out.state = cur;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return out;
}

// Smallest value of the modulator on [0, upper], in scaled units.
double min_modulation(const AnsatzState& s, double upper) {
  const auto a = x_coefficients(s);
  double lo = 1.0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double x = upper * i / (kGridPoints - 1);
    lo = std::min(lo, (a[0] + a[1] * x + a[2] * x * x) / a[0]);
  }
  return lo;
}

double upper_normal(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double gamma_upper(double shape, double x_over_scale) {
  if (x_over_scale <= 0.0) return 1.0;
  return boost::math::gamma_q(shape, x_over_scale);
}

// Upper partial moments T_k(x) = int_x^inf t^k p0(t) dt for k = 0, 1, 2.
std::array<double, 3> base_partial_moments(Family base, double mean, double variance, double x) {
  if (base == Family::normal) {
    const double sd = std::sqrt(variance);
    const double z = (x - mean) / sd;
    const double tail = upper_normal(z);
    const double phi = normal_pdf(z);
    return {tail, mean * tail + sd * phi, (mean * mean + variance) * tail + sd * phi * (mean + x)};
  }
  const double shape = mean * mean / variance;
  const double scale = variance / mean;
  const double u = x / scale;
  return {gamma_upper(shape, u), shape * scale * gamma_upper(shape + 1.0, u),
          shape * (shape + 1.0) * scale * scale * gamma_upper(shape + 2.0, u)};
}

double base_density(Family base, double mean, double variance, double x) {
  if (base == Family::normal) {
    const double sd = std::sqrt(variance);
    return normal_pdf((x - mean) / sd) / sd;
  }
  if (x < 0.0) return 0.0;
  const double shape = mean * mean / variance;
  const double scale = variance / mean;
  return boost::math::gamma_p_derivative(shape, x / scale) / scale;
}

void check_support(FitResult& fit, double support_max) {
  if (std::isfinite(support_max) && support_max > 0.0) {
    fit.diagnostics.mass_above_support = survival(fit, support_max);
  }
}

}  // namespace

Family parse_family(std::string_view name) {
  if (name == "normal") return Family::normal;
  if (name == "gamma") return Family::gamma;
  if (name == "lognormal") return Family::lognormal;
  if (name == "ansatz" || name == "poly_ansatz") return Family::poly_ansatz;
  throw std::invalid_argument("unknown fit family: " + std::string(name));
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::normal: return "normal";
    case Family::gamma: return "gamma";
    case Family::lognormal: return "lognormal";
    case Family::poly_ansatz: return "poly_ansatz";
  }
  return "?";
}

Family FitResult::family() const {
  switch (params.index()) {
    case 0: return Family::normal;
    case 1: return Family::gamma;
    case 2: return Family::lognormal;
    default: return Family::poly_ansatz;
  }
}

FitResult fit_two_moment(double mean, double variance, Family family, double support_max) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("two-moment fit needs a positive variance, got " + std::to_string(variance));
  }
  if (!std::isfinite(mean)) throw DomainError("two-moment fit needs a finite mean");
  FitResult fit;
  switch (family) {
    case Family::normal: {
      if (mean < 0.0) throw DomainError("normal fit needs a non-negative mean");
      fit.params = NormalParams{mean, variance};
      const BaseMoments g = base_moments(Family::normal, mean, variance);
      fit.moments_achieved = {g[1], g[2], g[3], g[4]};
      break;
    }
    case Family::gamma: {
      if (!(mean > 0.0)) throw DomainError("gamma fit needs a positive mean");
      const GammaParams p{mean * mean / variance, variance / mean};
      fit.params = p;
      double m = 1.0;
      for (int k = 1; k <= 4; ++k) {
        m *= p.scale * (p.shape + (k - 1));
        fit.moments_achieved[static_cast<std::size_t>(k - 1)] = m;
      }
      break;
    }
    case Family::lognormal: {
      if (!(mean > 0.0)) throw DomainError("lognormal fit needs a positive mean");
      const double log_var = std::log1p(variance / (mean * mean));
      const LognormalParams p{std::log(mean) - 0.5 * log_var, log_var};
      fit.params = p;
      for (int k = 1; k <= 4; ++k) {
        fit.moments_achieved[static_cast<std::size_t>(k - 1)] = std::exp(k * p.log_mean + 0.5 * k * k * p.log_variance);
      }
      break;
    }
    case Family::poly_ansatz:
      throw std::invalid_argument("poly_ansatz is a four-moment family; use fit_poly_ansatz");
  }
  fit.diagnostics.residual =
      std::max(std::abs(fitted_mean(fit) - mean) / mean, std::abs(fitted_variance(fit) - variance) / variance);
  if (mean == 0.0) fit.diagnostics.residual = std::abs(fitted_variance(fit) - variance) / variance;
  check_support(fit, support_max);
  return fit;
}

std::array<double, 4> raw_from_central(double mean, double variance, double c3, double c4) {
  const double m = mean;
  const double m2 = variance + m * m;
  const double m3 = c3 + 3.0 * m * variance + m * m * m;
  const double m4 = c4 + 4.0 * m * c3 + 6.0 * m * m * variance + m * m * m * m;
  return {m, m2, m3, m4};
}

std::array<double, 4> ansatz_input(const MomentSummary& s, std::optional<double> chosen) {
  if (s.validity.single_row_or_column) throw DegenerateError("I is identically zero; nothing to fit");
  const double variance = chosen.value_or(s.best_variance());
  if (!(variance > 0.0)) throw DegenerateError("ansatz fit needs a positive variance");
  if (s.validity.independence_degenerate) {
    return raw_from_central(s.mean_exact, variance, 0.0, 3.0 * variance * variance);
  }
  if (!s.central3) {
    throw ZeroCellError("ansatz fit needs the third central moment, which requires every posterior cell positive");
  }
  return raw_from_central(s.mean_exact, variance, *s.central3, s.central4);
}

bool is_valid_moment_sequence(const std::array<double, 4>& m) {
  for (double v : m) {
    if (!std::isfinite(v)) return false;
  }
  const double variance = m[1] - m[0] * m[0];
  if (!(variance > 0.0)) return false;
  // Work with the standardised variable so the Hankel matrix is O(1).
  const double sd = std::sqrt(variance);
  const double mean = m[0];
  const double c3 = m[2] - 3.0 * mean * m[1] + 2.0 * mean * mean * mean;
  const double c4 = m[3] - 4.0 * mean * m[2] + 6.0 * mean * mean * m[1] - 3.0 * mean * mean * mean * mean;
  const double skew = c3 / (sd * sd * sd);
  const double kurt = c4 / (variance * variance);
  // Hankel matrix of (1, 0, 1, skew, kurt): positive definite iff kurt > 1 + skew^2.
  return kurt - 1.0 - skew * skew > 1e-12 * std::max(1.0, kurt);
}

FitResult fit_poly_ansatz(const std::array<double, 4>& raw, Family base, const AnsatzOptions& options) {
  if (base != Family::normal && base != Family::gamma) {
    throw std::invalid_argument("ansatz base must be normal or gamma");
  }
  if (!(raw[0] > 0.0)) throw ValidationError("ansatz fit needs a positive mean");
  if (!is_valid_moment_sequence(raw)) {
    throw ValidationError("moments do not form a valid moment sequence (Hankel matrix not positive definite)");
  }

  const double sd = std::sqrt(raw[1] - raw[0] * raw[0]);
  std::array<double, 4> target{};
  for (int k = 0; k < 4; ++k) target[k] = raw[k] / std::pow(sd, k + 1);

  double upper = options.support_max;
  if (!(std::isfinite(upper) && upper > 0.0)) upper = raw[0] + 10.0 * sd;
  upper *= 1.05;
  const double upper_scaled = upper / sd;

  // The unmodulated base first: it is the answer whenever the target already
  // has the base's shape. Otherwise (beta, gamma) = 0 is a singular point of
  // the map (a small beta acts like a mean shift), so restart from a fixed
  // grid of modulators with the base rescaled to the target mean/variance.
  const double var_t = target[1] - target[0] * target[0];
  std::vector<AnsatzState> starts{{0.0, 0.0, target[0], var_t}};
  for (double g : {0.25, 0.5, 1.0, 2.0}) {
    for (double b : {-0.5, 0.5, -1.0, 1.0, -2.0, 2.0}) {
      const StdMoments e = standard_moments(base, target[0], var_t);
      const double w1 = (b * e[2] + g * e[3]) / (1.0 + g);
      const double w2 = (e[2] + b * e[3] + g * e[4]) / (1.0 + g);
      const double spread = w2 - w1 * w1;
      if (!(spread > 0.0)) continue;
      const double base_sd = std::sqrt(var_t / spread);
      AnsatzState s{b, g, target[0] - base_sd * w1, base_sd * base_sd};
      if (state_valid(base, s)) starts.push_back(s);
    }
  }

  SolveOutcome best{starts.front(), std::numeric_limits<double>::infinity(), 0};
  bool best_nonnegative = false;
  int iterations = 0;
  int tried = 0;
  for (const AnsatzState& s : starts) {
    ++tried;
    const SolveOutcome o = newton(base, s, target, options.max_iterations);
    iterations += o.iterations;
    if (!(o.residual <= options.tolerance)) {
      if (!(best.residual <= options.tolerance) && o.residual < best.residual) best = o;
      continue;
    }
    const bool nonneg = min_modulation(o.state, upper_scaled) >= 0.0;
    const double size = o.state.beta * o.state.beta + o.state.gamma * o.state.gamma;
    const double best_size = best.state.beta * best.state.beta + best.state.gamma * best.state.gamma;
    const bool better = !(best.residual <= options.tolerance) || (nonneg && !best_nonnegative) ||
                        (nonneg == best_nonnegative && size < best_size);
    if (better) {
      best = o;
      best_nonnegative = nonneg;
    }
    if (tried == 1) break;  // the base itself fits
  }
  if (!(best.residual <= options.tolerance)) {
    throw ConvergenceError("ansatz fit did not converge; best residual " + std::to_string(best.residual),
                           best.residual);
  }

  const AnsatzState& s = best.state;
  const auto a = x_coefficients(s);
  PolyAnsatzParams p;
  p.base = base;
  p.linear = a[1] / a[0] / sd;
  p.quadratic = a[2] / a[0] / (sd * sd);
  p.base_mean = s.mean * sd;
  p.base_variance = s.variance * sd * sd;
  p.normalization = (1.0 + s.gamma) / a[0];

  FitResult fit;
  fit.params = p;
  const auto scaled = modulated_moments(base, s);
  for (int k = 0; k < 4; ++k) fit.moments_achieved[k] = scaled[k] * std::pow(sd, k + 1);
  fit.diagnostics.iterations = iterations;
  fit.diagnostics.residual = best.residual;
  fit.diagnostics.starts = tried;
  fit.diagnostics.min_modulation = min_modulation(s, upper_scaled);
  fit.diagnostics.density_nonnegative = fit.diagnostics.min_modulation >= 0.0;
  check_support(fit, options.support_max);
  return fit;
}

double fitted_mean(const FitResult& fit) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) return p.mean;
        if constexpr (std::is_same_v<T, GammaParams>) return p.shape * p.scale;
        if constexpr (std::is_same_v<T, LognormalParams>) return std::exp(p.log_mean + 0.5 * p.log_variance);
        return fit.moments_achieved[0];
      },
      fit.params);
}

double fitted_variance(const FitResult& fit) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) return p.variance;
        if constexpr (std::is_same_v<T, GammaParams>) return p.shape * p.scale * p.scale;
        if constexpr (std::is_same_v<T, LognormalParams>) {
          return std::expm1(p.log_variance) * std::exp(2.0 * p.log_mean + p.log_variance);
        }
        const auto& m = fit.moments_achieved;
        return m[1] - m[0] * m[0];
      },
      fit.params);
}

double density(const FitResult& fit, double x) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) {
          return base_density(Family::normal, p.mean, p.variance, x);
        } else if constexpr (std::is_same_v<T, GammaParams>) {
          if (x < 0.0) return 0.0;
          return boost::math::gamma_p_derivative(p.shape, x / p.scale) / p.scale;
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          if (x <= 0.0) return 0.0;
          const double sd = std::sqrt(p.log_variance);
          return normal_pdf((std::log(x) - p.log_mean) / sd) / (sd * x);
        } else {
          const double poly = 1.0 + p.linear * x + p.quadratic * x * x;
          return poly * base_density(p.base, p.base_mean, p.base_variance, x) / p.normalization;
        }
      },
      fit.params);
}

double survival(const FitResult& fit, double x) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NormalParams>) {
          return upper_normal((x - p.mean) / std::sqrt(p.variance));
        } else if constexpr (std::is_same_v<T, GammaParams>) {
          return gamma_upper(p.shape, x / p.scale);
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          if (x <= 0.0) return 1.0;
          return upper_normal((std::log(x) - p.log_mean) / std::sqrt(p.log_variance));
        } else {
          const auto t = base_partial_moments(p.base, p.base_mean, p.base_variance, x);
          return (t[0] + p.linear * t[1] + p.quadratic * t[2]) / p.normalization;
        }
      },
      fit.params);
}

double survival_by_quadrature(const FitResult& fit, double x) {
  const double mean = fitted_mean(fit);
  const double sd = std::sqrt(fitted_variance(fit));
  double lower = x;
  // Nothing below zero for the positive families.
  if (fit.family() == Family::gamma || fit.family() == Family::lognormal ||
      (fit.family() == Family::poly_ansatz && std::get<PolyAnsatzParams>(fit.params).base == Family::gamma)) {
    lower = std::max(lower, 0.0);
  } else {
    lower = std::max(lower, mean - 40.0 * sd);
  }
  const double split = std::max(lower, mean) + 8.0 * sd;
  auto f = [&](double t) { return density(fit, t); };

  boost::math::quadrature::tanh_sinh<double> body;
  boost::math::quadrature::exp_sinh<double> tail;
  const double tol = 1e-13;
  double mass = 0.0;
  if (split > lower) mass += body.integrate(f, lower, split, tol);
  mass += tail.integrate(f, split, std::numeric_limits<double>::infinity(), tol);
  return mass;
}

}  // namespace mipost
