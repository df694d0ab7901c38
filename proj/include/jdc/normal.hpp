#pragma once

#include <cmath>
#include <numbers>

namespace jdc::normal {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934381868;
inline constexpr double log_sqrt_2pi = 0.918938533204672741780329736405617640;

/// Standard normal density.
inline double pdf(double t) { return inv_sqrt_2pi * std::exp(-0.5 * t * t); }

inline double log_pdf(double t) { return -log_sqrt_2pi - 0.5 * t * t; }

/// Standard normal distribution function via erfc, which keeps full relative
/// precision in the lower tail where 1 + erf would cancel.
inline double cdf(double t) { return 0.5 * std::erfc(-t * std::numbers::sqrt2 / 2.0); }

/// Upper tail 1 - cdf(t) without cancellation.
inline double survival(double t) { return cdf(-t); }

/// P(lo < Z <= hi). Evaluated in whichever tail is smaller so that the
/// difference does not lose digits when both bounds sit far on one side.
inline double interval(double lo, double hi) {
    if (lo > 0.0) {
        return cdf(-lo) - cdf(-hi);
    }
    return cdf(hi) - cdf(lo);
}

/// phi(t) / Phi(t). Asymptotic series for the far lower tail where both
/// factors underflow.
inline double inverse_mills(double t) {
    if (t > -30.0) {
        return pdf(t) / cdf(t);
    }
    const double x = -t;
    const double x2 = x * x;
    return x + 1.0 / x - 2.0 / (x * x2) + 10.0 / (x * x2 * x2);
}

} // namespace jdc::normal
