#pragma once

namespace mipost {

/// Euler-Mascheroni constant; psi(1) = -kEulerGamma.
inline constexpr double kEulerGamma = 0.57721566490153286;

/// Digamma function psi(x) = d/dx log Gamma(x) for x > 0.
///
/// Arguments below 8 are lifted with psi(x) = psi(x+1) - 1/x; the
/// asymptotic Bernoulli series is then summed through x^-14. Absolute
/// error is below 1e-10 for x >= 1e-6 and near machine precision for
/// x >= 1. Throws DomainError for x <= 0 or NaN.
double digamma(double x);

/// psi(m) = -gamma + sum_{k=1}^{m-1} 1/k for integer m >= 1.
double digamma_integer(long m);

/// psi(m + 1/2) = -gamma - 2 log 2 + 2 sum_{k=1}^{m} 1/(2k-1) for m >= 0.
///
/// The sign of the 2 log 2 term is the one forced by psi(1) = -gamma,
/// the duplication formula and the recurrence; psi(1/2) = -1.9635...
double digamma_half_integer(long m);

/// Largest argument served from the integer/half-integer table.
inline constexpr double kDigammaTableLimit = 512.0;

/// digamma() with a table fast path for integer and half-integer arguments
/// up to kDigammaTableLimit. The table is built on first use (thread-safe
/// static initialisation) and is read-only afterwards.
double digamma_lookup(double x);

}  // namespace mipost
