#ifndef LASIL_GEOMETRY_HPP
#define LASIL_GEOMETRY_HPP

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace lasil {

using Vec2 = Eigen::Vector2d;
using Polyline = std::vector<Vec2>;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 rotate(const Vec2& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

inline double polyline_length(std::span<const Vec2> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += (line[i] - line[i - 1]).norm();
  return total;
}

/// Point at arc length `s` along the polyline, clamped to its ends.
inline Vec2 point_at_arclength(std::span<const Vec2> line, double s) {
  if (s <= 0.0) return line.front();
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = (line[i] - line[i - 1]).norm();
    if (s <= seg) return line[i - 1] + (line[i] - line[i - 1]) * (s / seg);
    s -= seg;
  }
  return line.back();
}

}  // namespace lasil

#endif  // LASIL_GEOMETRY_HPP
