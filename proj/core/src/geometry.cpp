// SPDX-License-Identifier: Apache-2.0

#include "qgeom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgeom/errors.hpp"
#include "qgeom/stats.hpp"

namespace qgeom {
namespace {

constexpr std::size_t kLeafBlock = 128;

// Pairwise (cascade) summation of f(i) over [begin, end).
template <class F>
double cascade(std::size_t begin, std::size_t end, const F& f) {
  if (end - begin <= kLeafBlock) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += f(i);
    return s;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return cascade(begin, mid, f) + cascade(mid, end, f);
}

template <class F>
double reduce(std::size_t n, const F& f) {
  if (n >= kPairwiseThreshold) return cascade(0, n, f);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* fn) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(fn) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
}

GeometryReport build_report(std::span<const double> w, std::span<const double> q, const char* fn) {
  require_same_length(w, q, fn);
  GeometryReport r;
  r.dot = dot(w, q);
  r.l1_w = l1_norm(w);
  r.l2_w = l2_norm(w);
  r.l2_q = l2_norm(q);
  if (r.l2_w == 0.0 || r.l2_q == 0.0) {
    throw DegenerateInputError(std::string(fn) + ": zero-norm operand");
  }
  r.cosine = std::clamp(r.dot / (r.l2_w * r.l2_q), -1.0, 1.0);
  r.angle_deg = angle_degrees(r.cosine);
  return r;
}

}  // namespace

double sum(std::span<const double> x) {
  return reduce(x.size(), [&](std::size_t i) { return x[i]; });
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "dot");
  return reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double l1_norm(std::span<const double> x) {
  return reduce(x.size(), [&](std::size_t i) { return std::fabs(x[i]); });
}

double l2_norm(std::span<const double> x) {
  return std::sqrt(reduce(x.size(), [&](std::size_t i) { return x[i] * x[i]; }));
}

double angle_degrees(double cosine) {
  return std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / stats::kPi;
}

GeometryReport cosine_between(std::span<const double> w, std::span<const double> q) {
  return build_report(w, q, "cosine_between");
}

GeometryReport cosine_between(std::span<const double> w, const QuantizedVector& q) {
  const auto levels = q.dequantize();
  return build_report(w, levels, "cosine_between");
}

GeometryReport angle_wrt_noise(std::span<const double> w, std::span<const double> eps) {
  return build_report(w, eps, "angle_wrt_noise");
}

}  // namespace qgeom
