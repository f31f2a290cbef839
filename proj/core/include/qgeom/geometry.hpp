// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "qgeom/quantizers.hpp"

namespace qgeom {

/// Reductions behind cos(theta) = W.Q(W) / (||W||_2 ||Q(W)||_2).
struct GeometryReport {
  double dot = 0.0;
  double l1_w = 0.0;
  double l2_w = 0.0;
  double l2_q = 0.0;
  double cosine = 0.0;     // clamped to [-1, 1]
  double angle_deg = 0.0;  // arccos(cosine) in degrees
};

/// Inputs of at least this length are reduced pairwise.
inline constexpr std::size_t kPairwiseThreshold = std::size_t{1} << 15;

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double l1_norm(std::span<const double> x);
double l2_norm(std::span<const double> x);

/// Throws ShapeError on length mismatch, DegenerateInputError on a zero norm.
GeometryReport cosine_between(std::span<const double> w, std::span<const double> q);
GeometryReport cosine_between(std::span<const double> w, const QuantizedVector& q);

/// Angle between a weight vector and an additive noise vector.
GeometryReport angle_wrt_noise(std::span<const double> w, std::span<const double> eps);

/// arccos of a cosine clamped to [-1, 1], in degrees.
double angle_degrees(double cosine);

}  // namespace qgeom
