#include "mipost/special.hpp"

#include "mipost/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace mipost {

namespace {

constexpr double kLiftThreshold = 8.0;

// Harmonic sums beyond this length are delegated to the series path.
constexpr long kMaxExactTerms = 1L << 16;

// psi(x) for x >= kLiftThreshold. Coefficients are B_2k / (2k).
double digamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv2 * (1.0 / 12 -
                  inv2 * (1.0 / 120 -
                  inv2 * (1.0 / 252 -
                  inv2 * (1.0 / 240 -
                  inv2 * (1.0 / 132 -
                  inv2 * (691.0 / 32760 -
                  inv2 * (1.0 / 12)))))));
  return std::log(x) - 0.5 * inv - series;
}

struct DigammaTable {
  // integer[k] = psi(k), half[k] = psi(k + 1/2)
  std::array<double, 513> integer{};
  std::array<double, 512> half{};

  DigammaTable() {
    integer[0] = 0.0;  // unused pole
    for (long k = 1; k <= 512; ++k) integer[static_cast<std::size_t>(k)] = digamma_integer(k);
    for (long k = 0; k < 512; ++k) half[static_cast<std::size_t>(k)] = digamma_half_integer(k);
  }
};

const DigammaTable& table() {
  static const DigammaTable t;
  return t;
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: argument must be positive, got " + std::to_string(x));
  if (std::isinf(x)) return x;
  double lift = 0.0;
  double y = x;
  if (y < kLiftThreshold) {
    // accumulate the small reciprocals first, 1/x last
    y += 1.0;
    while (y < kLiftThreshold) {
      lift += 1.0 / y;
      y += 1.0;
    }
    return (digamma_asymptotic(y) - lift) - 1.0 / x;
  }
  return digamma_asymptotic(y);
}

double digamma_integer(long m) {
  if (m < 1) throw DomainError("digamma_integer: argument must be >= 1, got " + std::to_string(m));
  if (m > kMaxExactTerms) return digamma(static_cast<double>(m));
  double sum = 0.0;
  for (long k = m - 1; k >= 1; --k) sum += 1.0 / static_cast<double>(k);
  return sum - kEulerGamma;
}

double digamma_half_integer(long m) {
  if (m < 0) throw DomainError("digamma_half_integer: argument must be >= 0, got " + std::to_string(m));
  if (m > kMaxExactTerms) return digamma(static_cast<double>(m) + 0.5);
  double sum = 0.0;
  for (long k = m; k >= 1; --k) sum += 1.0 / static_cast<double>(2 * k - 1);
  return 2.0 * sum - kEulerGamma - 2.0 * std::numbers::ln2;
}

double digamma_lookup(double x) {
  const double twice = 2.0 * x;
  if (x > 0.0 && x <= kDigammaTableLimit && twice == std::floor(twice)) {
    const auto k = static_cast<std::size_t>(x);
    if (std::floor(x) == x) return table().integer[k];
    return table().half[k];
  }
  return digamma(x);
}

}  // namespace mipost
