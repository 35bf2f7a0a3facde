#include "helpers.hpp"

#include "mipost/error.hpp"
#include "mipost/fit.hpp"
#include "mipost/moments.hpp"

#include <doctest.h>

#include <cmath>

using namespace mipost;
using namespace mipost::testing;

namespace {

double max_rel_moment_error(const FitResult& fit, const std::array<double, 4>& target) {
  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    worst = std::max(worst, std::abs(fit.moments_achieved[k] - target[k]) / std::abs(target[k]));
  }
  return worst;
}

std::array<double, 4> gamma_raw(double shape, double scale) {
  std::array<double, 4> m{};
  double acc = 1.0;
  for (int k = 0; k < 4; ++k) {
    acc *= scale * (shape + k);
    m[static_cast<std::size_t>(k)] = acc;
  }
  return m;
}

}  // namespace

TEST_CASE("family names") {
  CHECK(parse_family("gamma") == Family::gamma);
  CHECK(parse_family("ansatz") == Family::poly_ansatz);
  CHECK(parse_family("poly_ansatz") == Family::poly_ansatz);
  CHECK(to_string(Family::lognormal) == "lognormal");
  CHECK_THROWS(parse_family("beta"));
}

TEST_CASE("two-moment closed forms") {
  const FitResult g = fit_two_moment(2.0, 4.0, Family::gamma);
  const auto& gp = std::get<GammaParams>(g.params);
  CHECK(gp.shape == 1.0);
  CHECK(gp.scale == 2.0);

  const FitResult ln = fit_two_moment(1.0, std::exp(1.0) - 1.0, Family::lognormal);
  const auto& lp = std::get<LognormalParams>(ln.params);
  CHECK(std::abs(lp.log_variance - 1.0) <= 1e-15);
  CHECK(std::abs(lp.log_mean + 0.5) <= 1e-15);

  const FitResult nm = fit_two_moment(0.3, 0.01, Family::normal);
  CHECK(fitted_mean(nm) == 0.3);
  CHECK(fitted_variance(nm) == 0.01);

  CHECK_THROWS_AS(fit_two_moment(0.1, 0.0, Family::gamma), DomainError);
  CHECK_THROWS_AS(fit_two_moment(0.0, 0.1, Family::gamma), DomainError);
  CHECK_THROWS_AS(fit_two_moment(-1.0, 0.1, Family::lognormal), DomainError);
}

TEST_CASE("two-moment fits reproduce mean and variance") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> log_u(std::log(1e-4), std::log(10.0));
  for (int trial = 0; trial < 100; ++trial) {
    const double mean = std::exp(log_u(rng));
    const double variance = std::exp(log_u(rng)) * mean * mean;
    for (Family f : {Family::normal, Family::gamma, Family::lognormal}) {
      const FitResult fit = fit_two_moment(mean, variance, f);
      CHECK(close_rel(fitted_mean(fit), mean, 1e-12));
      CHECK(close_rel(fitted_variance(fit), variance, 1e-12));
      CHECK(fit.diagnostics.residual <= 1e-12);
      CHECK(close_rel(fit.moments_achieved[0], mean, 1e-12));
      CHECK(close_rel(fit.moments_achieved[1] - mean * mean, variance, 1e-9));
    }
  }
}

TEST_CASE("support diagnostics") {
  const FitResult fit = fit_two_moment(0.1, 0.01, Family::gamma, std::log(2.0));
  CHECK(fit.diagnostics.mass_above_support > 0.0);
  CHECK(std::abs(fit.diagnostics.mass_above_support - survival(fit, std::log(2.0))) <= 1e-15);
  CHECK(std::isnan(fit_two_moment(0.1, 0.01, Family::gamma).diagnostics.mass_above_support));
}

TEST_CASE("moment sequence validity") {
  CHECK(is_valid_moment_sequence(raw_from_central(1.0, 1.0, 0.0, 3.0)));
  CHECK(is_valid_moment_sequence(gamma_raw(2.0, 0.5)));
  // kurtosis below 1 + skew^2 is impossible
  CHECK_FALSE(is_valid_moment_sequence(raw_from_central(1.0, 1.0, 0.0, 0.9)));
  CHECK_FALSE(is_valid_moment_sequence(raw_from_central(1.0, 1.0, 2.0, 4.5)));
  CHECK_FALSE(is_valid_moment_sequence(raw_from_central(1.0, 0.0, 0.0, 0.0)));
  CHECK_FALSE(is_valid_moment_sequence({1.0, 2.0, std::nan(""), 1.0}));
  // the leading-order all-ones input: c3 = c4 = 0, no density has it
  CHECK_FALSE(is_valid_moment_sequence(raw_from_central(1.0 / 12.0, 1.0 / 60.0, 0.0, 0.0)));

  CHECK_THROWS_AS(fit_poly_ansatz(raw_from_central(1.0, 1.0, 0.0, 0.9), Family::normal), ValidationError);
  CHECK_THROWS_AS(fit_poly_ansatz(raw_from_central(1.0 / 12.0, 1.0 / 60.0, 0.0, 0.0), Family::gamma),
                  ValidationError);
}

TEST_CASE("ansatz reduces to its base") {
  SUBCASE("gaussian input, normal base") {
    const auto raw = raw_from_central(0.4, 0.09, 0.0, 3.0 * 0.09 * 0.09);
    const FitResult fit = fit_poly_ansatz(raw, Family::normal);
    const auto& p = std::get<PolyAnsatzParams>(fit.params);
    CHECK(std::abs(p.linear) <= 1e-8);
    CHECK(std::abs(p.quadratic) <= 1e-8);
    CHECK(close_rel(p.base_mean, 0.4, 1e-8));
    CHECK(close_rel(p.base_variance, 0.09, 1e-8));
    CHECK(fit.diagnostics.residual <= 1e-8);
  }
  SUBCASE("gamma input, gamma base") {
    const auto raw = gamma_raw(3.0, 0.05);
    const FitResult fit = fit_poly_ansatz(raw, Family::gamma);
    const auto& p = std::get<PolyAnsatzParams>(fit.params);
    CHECK(std::abs(p.linear) * 0.15 <= 1e-8);
    CHECK(std::abs(p.quadratic) * 0.15 * 0.15 <= 1e-8);
    CHECK(fit.diagnostics.residual <= 1e-8);
    CHECK(fit.diagnostics.starts == 1);
  }
}

TEST_CASE("ansatz on posterior moments") {
  const MomentSummary ones = summarize(uniform_counts(2, 2, 1.0));
  const auto raw = ansatz_input(ones);
  CHECK(std::abs(raw[0] - 1.0 / 12.0) <= 1e-12);
  CHECK(std::abs(raw[1] - raw[0] * raw[0] - 1.0 / 60.0) <= 1e-15);
  for (Family base : {Family::gamma, Family::normal}) {
    AnsatzOptions opt;
    opt.support_max = ones.i_max;
    const FitResult fit = fit_poly_ansatz(raw, base, opt);
    CHECK(fit.diagnostics.residual <= 1e-8);
    CHECK(max_rel_moment_error(fit, raw) <= 1e-8);
    CHECK(std::isfinite(fit.diagnostics.mass_above_support));
  }

  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const PosteriorCounts c = random_positive(rng, 4).scaled(4.0);
    const MomentSummary s = summarize(c);
    std::array<double, 4> in{};
    try {
      in = ansatz_input(s);
    } catch (const DegenerateError&) {
      continue;
    }
    if (!is_valid_moment_sequence(in)) continue;
    const FitResult fit = fit_poly_ansatz(in, Family::gamma);
    CHECK(fit.diagnostics.residual <= 1e-8);
    CHECK(max_rel_moment_error(fit, in) <= 1e-8);
  }

  CHECK_THROWS_AS(ansatz_input(summarize(counts({{5, 0}, {2, 5}}))), ZeroCellError);
  CHECK_THROWS_AS(ansatz_input(summarize(counts({{5, 1, 2}}))), DegenerateError);
}

TEST_CASE("survival closed forms") {
  const FitResult g = fit_two_moment(1.0, 1.0, Family::gamma);
  CHECK(std::abs(survival(g, 1.0) - std::exp(-1.0)) <= 1e-12);
  CHECK(survival(g, 0.0) == 1.0);
  CHECK(std::abs(survival(fit_two_moment(1.0, 1.0, Family::normal), 1.0) - 0.5) <= 1e-15);
  const FitResult ln = fit_two_moment(1.0, std::exp(1.0) - 1.0, Family::lognormal);
  CHECK(std::abs(survival(ln, std::exp(-0.5)) - 0.5) <= 1e-15);

  // right-skewed gamma: less than half the mass above the mean
  const FitResult ones = fit_two_moment(1.0 / 12.0, 1.0 / 60.0, Family::gamma);
  const double at_mean = survival(ones, 1.0 / 12.0);
  CHECK(at_mean > 0.0);
  CHECK(at_mean < 0.5);
}

TEST_CASE("survival is monotone and matches quadrature") {
  std::vector<FitResult> fits;
  fits.push_back(fit_two_moment(1.0, 1.0, Family::gamma));
  fits.push_back(fit_two_moment(1.0 / 12.0, 1.0 / 60.0, Family::gamma));  // shape < 1
  fits.push_back(fit_two_moment(0.2, 0.01, Family::normal));
  fits.push_back(fit_two_moment(0.2, 0.01, Family::lognormal));
  fits.push_back(fit_poly_ansatz(ansatz_input(summarize(uniform_counts(2, 2, 1.0))), Family::gamma));
  fits.push_back(fit_poly_ansatz(ansatz_input(summarize(counts({{8, 2}, {2, 8}}).scaled(4.0))), Family::gamma));
  fits.push_back(fit_poly_ansatz(ansatz_input(summarize(counts({{8, 2}, {2, 8}}).scaled(4.0))), Family::normal));

  for (const FitResult& fit : fits) {
    CAPTURE(to_string(fit.family()));
    const double mean = fitted_mean(fit);
    const double sd = std::sqrt(fitted_variance(fit));
    double prev = 2.0;
    for (double z = -3.0; z <= 8.0; z += 0.25) {
      const double x = std::max(0.0, mean + z * sd);
      const double s = survival(fit, x);
      // a signed ansatz density need not give a monotone tail
      if (fit.diagnostics.density_nonnegative) {
        CHECK(s <= prev + 1e-15);
        CHECK(s >= -1e-15);
        CHECK(s <= 1.0 + 1e-12);
      }
      CHECK(std::abs(s - survival_by_quadrature(fit, x)) <= 1e-8);
      prev = s;
    }
  }
}

TEST_CASE("ansatz density integrates to one") {
  const FitResult fit = fit_poly_ansatz(ansatz_input(summarize(counts({{8, 2}, {2, 8}}))), Family::gamma);
  CHECK(std::abs(survival(fit, 0.0) - 1.0) <= 1e-12);
  CHECK(std::abs(survival_by_quadrature(fit, 0.0) - 1.0) <= 1e-8);
  CHECK(std::abs(fitted_mean(fit) - fit.moments_achieved[0]) <= 1e-15);
}
