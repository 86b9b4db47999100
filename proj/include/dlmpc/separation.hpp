#pragma once

#include "dlmpc/dynamics.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dlmpc {

/// Maximum-margin line between two planar point sets.
///
/// Every point a of the first set satisfies normal·a <= support_a and every point b of the
/// second set satisfies normal·b >= support_b. `normal` has unit length and points from
/// the first set towards the second, so `margin()` is the width of the empty slab.
struct SeparatingHyperplane
{
  Position normal = Position::UnitX();
  double support_a = 0.0;
  double support_b = 0.0;

  double margin() const { return support_b - support_a; }
  /// Offset of the max-margin line normal·p = midpoint().
  double midpoint() const { return 0.5 * (support_a + support_b); }
};

/// Half-plane normal·position + offset <= 0 on an agent's planar position.
struct HalfPlane
{
  Position normal = Position::UnitX();
  double offset = 0.0;
  int other_agent = -1;

  double eval(const Position & p) const { return normal.dot(p) + offset; }
};

/// Convex hull in counter-clockwise order without collinear vertices.
/// Degenerate inputs give one vertex (all points equal) or two (all collinear).
std::vector<Position> convex_hull(std::vector<Position> points);

/// Hard-margin linear SVM in the plane.
///
/// The maximum-margin separator of two finite sets is the perpendicular bisector of the
/// closest pair of points of their convex hulls, so the problem is solved exactly by a
/// hull-distance computation. Returns std::nullopt when the hulls touch or overlap.
/// Throws std::invalid_argument when either set is empty.
std::optional<SeparatingHyperplane> fit_separating_hyperplane(
  std::span<const Position> points_a, std::span<const Position> points_b);

/// Same as fit_separating_hyperplane for sets already reduced to their convex hulls.
std::optional<SeparatingHyperplane> separate_hulls(
  const std::vector<Position> & hull_a, const std::vector<Position> & hull_b);

}  // namespace dlmpc
