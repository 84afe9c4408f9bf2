#pragma once
// Straight-line math for the sampling kernels.
//
// The scalar and AVX2 kernels must agree bit-for-bit, so this path avoids
// libm (whose results vary by implementation) and FMA (contraction changes
// rounding).  Every operation below is an IEEE basic op (+,-,*,/,sqrt) in a
// fixed order; the SIMD kernel mirrors the exact same sequence lane-wise.

#include <cstdint>

namespace gatesim {

namespace mathdetail {

inline constexpr double kSqrt2 = 1.4142135623730951;  // nearest double
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// atanh-series coefficients: ln(m) = 2s * (1 + z/3 + ... + z^6/13).
inline constexpr double kL3 = 1.0 / 3.0;
inline constexpr double kL5 = 1.0 / 5.0;
inline constexpr double kL7 = 1.0 / 7.0;
inline constexpr double kL9 = 1.0 / 9.0;
inline constexpr double kL11 = 1.0 / 11.0;
inline constexpr double kL13 = 1.0 / 13.0;

// Rational inverse-normal-CDF coefficients (central/tail split at 0.02425).
inline constexpr double kPLow = 0.02425;
inline constexpr double kPHigh = 1.0 - kPLow;
inline constexpr double kA[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
inline constexpr double kB[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
inline constexpr double kC[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
inline constexpr double kD[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

}  // namespace mathdetail

// Natural log for finite normal x in (0, 1]; relative error < 1e-12.
double log_fixed(double x);

// Inverse of the standard normal CDF for p in (0, 1); absolute error < 1e-8
// over the band-noise range used here.
double inv_normal_cdf(double p);

}  // namespace gatesim
