// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace qgeom::stats {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934381868;
// sqrt(2/pi)
inline constexpr double kSqrt2OverPi = 0.797884560802865355879892119868763737;

/// Error function. Power series for |x| < 2.5, Lentz continued fraction for
/// erfc beyond that; absolute error below 1e-14 on the whole real line.
/// Throws DomainError for non-finite x.
double erf(double x);

/// Complementary error function 1 - erf(x), accurate in the upper tail
/// (relative error ~1e-14 for x up to the underflow point near 26.5).
double erfc(double x);

/// Standard normal density (1/sqrt(2 pi)) exp(-x^2/2).
double std_normal_pdf(double x);

/// Standard normal CDF, 0.5 * (1 + erf(x / sqrt 2)). Evaluated through erfc
/// so that the lower tail keeps full relative precision.
double std_normal_cdf(double x);

/// Upper tail 1 - Phi(x), evaluated without cancellation.
double std_normal_sf(double x);

/// Mean of |X| for X ~ N(0, sigma^2): sigma * sqrt(2/pi).
double folded_normal_mean(double sigma);

/// E[X | X > t*sigma] / sigma scaled back: sigma * phi(t) / (1 - Phi(t)),
/// with t in units of sigma. Throws OverflowError when the tail mass
/// underflows to zero.
double truncated_normal_mean(double t, double sigma);

}  // namespace qgeom::stats
