#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ebl/common/grid.hpp"
#include "ebl/layout/layout.hpp"

namespace ebl {

using ExposureGrid = Grid2D;

inline std::size_t cells_along(double extent_nm, double pitch_nm) {
  return static_cast<std::size_t>(std::ceil(extent_nm / pitch_nm - 1e-9));
}

namespace detail {

// Signed-area accumulation rasterizer: each edge deposits its exact
// trapezoid contributions, a running sum along x turns them into per-cell
// coverage. Coordinates are in cell units.
class CoverageAccumulator {
 public:
  CoverageAccumulator(std::size_t w, std::size_t h)
      : w_(w), h_(h), stride_(w + 2), acc_(stride_ * h, 0.0) {}

  void line(Point p0, Point p1) {
    if (p0.y == p1.y) return;
    double dir = 1.0;
    if (p0.y > p1.y) {
      std::swap(p0, p1);
      dir = -1.0;
    }
    const double dxdy = (p1.x - p0.x) / (p1.y - p0.y);
    double x = p0.x;
    const auto y_begin = static_cast<std::size_t>(std::max(0.0, std::floor(p0.y)));
    const auto y_end = std::min(h_, static_cast<std::size_t>(std::ceil(p1.y)));
    for (std::size_t y = y_begin; y < y_end; ++y) {
      double* row = acc_.data() + y * stride_;
      const double dy = std::min(static_cast<double>(y + 1), p1.y) -
                        std::max(static_cast<double>(y), p0.y);
      const double xnext = x + dxdy * dy;
      const double d = dy * dir;
      const double x0 = std::min(x, xnext);
      const double x1 = std::max(x, xnext);
      const double x0floor = std::floor(x0);
      const auto x0i = static_cast<std::ptrdiff_t>(x0floor);
      const double x1ceil = std::ceil(x1);
      const auto x1i = static_cast<std::ptrdiff_t>(x1ceil);
      if (x1i <= x0i + 1) {
        const double xmf = 0.5 * (x + xnext) - x0floor;
        row[x0i] += d - d * xmf;
        row[x0i + 1] += d * xmf;
      } else {
        const double s = 1.0 / (x1 - x0);
        const double x0f = x0 - x0floor;
        const double a0 = 0.5 * s * (1.0 - x0f) * (1.0 - x0f);
        const double x1f = x1 - x1ceil + 1.0;
        const double am = 0.5 * s * x1f * x1f;
        row[x0i] += d * a0;
        if (x1i == x0i + 2) {
          row[x0i + 1] += d * (1.0 - a0 - am);
        } else {
          const double a1 = s * (1.5 - x0f);
          row[x0i + 1] += d * (a1 - a0);
          for (std::ptrdiff_t xi = x0i + 2; xi < x1i - 1; ++xi) row[xi] += d * s;
          const double a2 = a1 + static_cast<double>(x1i - x0i - 3) * s;
          row[x1i - 1] += d * (1.0 - a2 - am);
        }
        row[x1i] += d * am;
      }
      x = xnext;
    }
  }

  // Coverage in [0, 1] per cell; orientation-independent.
  void resolve_into(Grid2D& out, double weight) const {
    for (std::size_t y = 0; y < h_; ++y) {
      const double* row = acc_.data() + y * stride_;
      double running = 0.0;
      for (std::size_t x = 0; x < w_; ++x) {
        running += row[x];
        const double cov = std::min(std::abs(running), 1.0);
        if (cov > 0.0) out(x, y) += weight * cov;
      }
    }
  }

 private:
  std::size_t w_, h_, stride_;
  std::vector<double> acc_;
};

}  // namespace detail

// Area fraction of each cell covered by one polygon, scaled by `weight` and
// added to `out`.
inline void rasterize_polygon(const Polygon& poly, double weight, Grid2D& out) {
  detail::CoverageAccumulator acc(out.width, out.height);
  const double inv = 1.0 / out.pitch;
  const double xmax = static_cast<double>(out.width);
  const double ymax = static_cast<double>(out.height);
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    acc.line({std::clamp(a.x * inv, 0.0, xmax), std::clamp(a.y * inv, 0.0, ymax)},
             {std::clamp(b.x * inv, 0.0, xmax), std::clamp(b.y * inv, 0.0, ymax)});
  }
  acc.resolve_into(out, weight);
}

inline Grid2D empty_grid(const PatternLayout& layout, double pitch_nm) {
  require(pitch_nm > 0.0, "rasterize.pitch", "must be positive");
  return Grid2D(cells_along(layout.width, pitch_nm), cells_along(layout.height, pitch_nm), pitch_nm);
}

// Coverage mask (0..1) of a single shape.
inline Grid2D shape_coverage(const PatternLayout& layout, std::size_t shape, double pitch_nm) {
  Grid2D g = empty_grid(layout, pitch_nm);
  rasterize_polygon(layout.shapes.at(shape).polygon, 1.0, g);
  return g;
}

// Applied dose per cell in uC/cm^2: base dose x dose factor x covered fraction.
inline ExposureGrid rasterize(const PatternLayout& layout, double pitch_nm) {
  layout.validate();
  ExposureGrid g = empty_grid(layout, pitch_nm);
  for (const auto& s : layout.shapes) rasterize_polygon(s.polygon, layout.base_dose * s.dose_factor, g);
  return g;
}

}  // namespace ebl
