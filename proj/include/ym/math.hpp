#pragma once

#include <cmath>

namespace ym {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;
inline constexpr double kSqrt2Pi = 2.5066282746310002;

// Standard normal CDF via erfc; accurate in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// GELU in the exact Gaussian-CDF form and its first three derivatives.
// gelu(x)   = x Phi(x)
// gelu'(x)  = Phi(x) + x phi(x)
// gelu''(x) = phi(x) (2 - x^2)
// gelu'''(x)= phi(x) (x^3 - 4x)
inline double gelu(double x) { return x * norm_cdf(x); }
inline double gelu_d1(double x) { return norm_cdf(x) + x * norm_pdf(x); }
inline double gelu_d2(double x) { return norm_pdf(x) * (2.0 - x * x); }
inline double gelu_d3(double x) { return norm_pdf(x) * (x * x * x - 4.0 * x); }

// Inverse standard normal CDF (Acklam's rational approximation, |rel err| < 1.2e-9).
double norm_quantile(double p);

}  // namespace ym
