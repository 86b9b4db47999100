#include "dlmpc/separation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace dlmpc {

namespace {

double cross(const Position & o, const Position & a, const Position & b)
{
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(const Position & p, const Position & a, const Position & b)
{
  return std::min(a(0), b(0)) <= p(0) && p(0) <= std::max(a(0), b(0)) && std::min(a(1), b(1)) <= p(1) &&
         p(1) <= std::max(a(1), b(1));
}

bool segments_intersect(const Position & p1, const Position & p2, const Position & q1, const Position & q2)
{
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) { return true; }
  return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

// Point inside or on the boundary of a counter-clockwise convex polygon with >= 3 vertices.
bool inside_polygon(const Position & p, const std::vector<Position> & poly)
{
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (cross(poly[i], poly[(i + 1) % poly.size()], p) < 0.0) { return false; }
  }
  return true;
}

Position closest_on_segment(const Position & p, const Position & a, const Position & b)
{
  const Position ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) { return a; }
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + s * ab;
}

// Edges of a hull, with a single vertex treated as a zero-length edge.
std::vector<std::pair<Position, Position>> edges(const std::vector<Position> & hull)
{
  std::vector<std::pair<Position, Position>> out;
  if (hull.size() == 1) {
    out.emplace_back(hull[0], hull[0]);
  } else if (hull.size() == 2) {
    out.emplace_back(hull[0], hull[1]);
  } else {
    for (std::size_t i = 0; i < hull.size(); ++i) { out.emplace_back(hull[i], hull[(i + 1) % hull.size()]); }
  }
  return out;
}

}  // namespace

std::vector<Position> convex_hull(std::vector<Position> pts)
{
  std::sort(pts.begin(), pts.end(), [](const Position & a, const Position & b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) { return pts; }

  std::vector<Position> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) { --k; }
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) { --k; }
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

std::optional<SeparatingHyperplane> fit_separating_hyperplane(
  std::span<const Position> points_a, std::span<const Position> points_b)
{
  if (points_a.empty() || points_b.empty()) {
    throw std::invalid_argument("fit_separating_hyperplane: both point sets must be non-empty");
  }
  return separate_hulls(
    convex_hull({points_a.begin(), points_a.end()}), convex_hull({points_b.begin(), points_b.end()}));
}

std::optional<SeparatingHyperplane> separate_hulls(
  const std::vector<Position> & hull_a, const std::vector<Position> & hull_b)
{
  if (hull_a.empty() || hull_b.empty()) {
    throw std::invalid_argument("separate_hulls: both hulls must be non-empty");
  }
  const auto edges_a = edges(hull_a);
  const auto edges_b = edges(hull_b);

  for (const auto & [a1, a2] : edges_a) {
    for (const auto & [b1, b2] : edges_b) {
      if (segments_intersect(a1, a2, b1, b2)) { return std::nullopt; }
    }
  }
  if (hull_b.size() >= 3 && inside_polygon(hull_a.front(), hull_b)) { return std::nullopt; }
  if (hull_a.size() >= 3 && inside_polygon(hull_b.front(), hull_a)) { return std::nullopt; }

  double best = std::numeric_limits<double>::infinity();
  Position from_a;
  Position to_b;
  for (const auto & pa : hull_a) {
    for (const auto & [b1, b2] : edges_b) {
      const Position q = closest_on_segment(pa, b1, b2);
      const double d = (q - pa).squaredNorm();
      if (d < best) { best = d, from_a = pa, to_b = q; }
    }
  }
  for (const auto & pb : hull_b) {
    for (const auto & [a1, a2] : edges_a) {
      const Position q = closest_on_segment(pb, a1, a2);
      const double d = (pb - q).squaredNorm();
      if (d < best) { best = d, from_a = q, to_b = pb; }
    }
  }
  if (!(best > 0.0)) { return std::nullopt; }

  SeparatingHyperplane h;
  h.normal = (to_b - from_a).normalized();
  h.support_a = -std::numeric_limits<double>::infinity();
  h.support_b = std::numeric_limits<double>::infinity();
  for (const auto & p : hull_a) { h.support_a = std::max(h.support_a, h.normal.dot(p)); }
  for (const auto & p : hull_b) { h.support_b = std::min(h.support_b, h.normal.dot(p)); }
  return h;
}

}  // namespace dlmpc
