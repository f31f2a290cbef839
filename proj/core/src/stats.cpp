// SPDX-License-Identifier: Apache-2.0

#include "qgeom/stats.hpp"

#include <cmath>
#include <string>

#include "qgeom/errors.hpp"

namespace qgeom::stats {
namespace {

constexpr double kTwoOverSqrtPi = 1.128379167095512573896158903121545172;
constexpr double kInvSqrtPi = 0.564189583547756286948079451560772586;
constexpr double kSeriesCutoff = 2.5;

void require_finite(double x, const char* fn) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be finite");
  }
}

// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)).
// Every term is positive, so there is no cancellation for moderate x.
double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int k = 1; k < 500; ++k) {
    term *= 2.0 * x2 / (2.0 * k + 1.0);
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return kTwoOverSqrtPi * std::exp(-x2) * sum;
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated with the modified Lentz algorithm. Valid for x > 0.
double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi * std::exp(-x * x) / f;
}

}  // namespace

double erf(double x) {
  require_finite(x, "erf");
  const double ax = std::fabs(x);
  if (ax < kSeriesCutoff) return erf_series(x);
  const double r = 1.0 - erfc_continued_fraction(ax);
  return x < 0 ? -r : r;
}

double erfc(double x) {
  require_finite(x, "erfc");
  if (x >= kSeriesCutoff) return erfc_continued_fraction(x);
  if (x <= -kSeriesCutoff) return 2.0 - erfc_continued_fraction(-x);
  return 1.0 - erf_series(x);
}

double std_normal_pdf(double x) {
  require_finite(x, "std_normal_pdf");
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf");
  return 0.5 * erfc(-x / kSqrt2);
}

double std_normal_sf(double x) {
  require_finite(x, "std_normal_sf");
  return 0.5 * erfc(x / kSqrt2);
}

double folded_normal_mean(double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw DomainError("folded_normal_mean: sigma must be positive and finite");
  }
  return sigma * kSqrt2OverPi;
}

double truncated_normal_mean(double t, double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw DomainError("truncated_normal_mean: sigma must be positive and finite");
  }
  require_finite(t, "truncated_normal_mean");
  const double tail = std_normal_sf(t);
  if (tail <= 0.0) {
    throw OverflowError(
        "truncated_normal_mean: tail mass 1 - Phi(t) underflows at t = " +
        std::to_string(t) + "; use the asymptotic mean ~ t + 1/t instead");
  }
  return sigma * std_normal_pdf(t) / tail;
}

}  // namespace qgeom::stats
