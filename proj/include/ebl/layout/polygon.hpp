#pragma once

#include <cmath>
#include <vector>

namespace ebl {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

// Signed shoelace area, positive for counter-clockwise vertex order.
inline double signed_area(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

inline double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

inline Point centroid(const Polygon& poly) {
  const double a = signed_area(poly);
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double cross = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

inline Polygon rectangle(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline Polygon translated(const Polygon& poly, double dx, double dy) {
  Polygon out = poly;
  for (auto& p : out) {
    p.x += dx;
    p.y += dy;
  }
  return out;
}

namespace detail {

inline double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Closed segments share at least one point.
inline bool segments_touch(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = sign(orient(q1, q2, p1));
  const int d2 = sign(orient(q1, q2, p2));
  const int d3 = sign(orient(p1, p2, q1));
  const int d4 = sign(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace detail

// Simple polygon: no repeated vertices, non-adjacent edges never touch and
// adjacent edges do not fold back onto each other.
inline bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    if (a == b) return false;
    // Adjacent edge folding back (collinear, opposite direction).
    const auto& c = poly[(i + 2) % n];
    if (detail::orient(a, b, c) == 0.0 &&
        (c.x - b.x) * (b.x - a.x) + (c.y - b.y) * (b.y - a.y) < 0.0)
      return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (detail::segments_touch(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
        return false;
    }
  }
  return std::abs(signed_area(poly)) > 0.0;
}

}  // namespace ebl
