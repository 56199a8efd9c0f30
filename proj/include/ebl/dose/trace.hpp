#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/dose/convolve.hpp"
#include "ebl/layout/layout.hpp"

namespace ebl {

struct TraceProfile {
  std::vector<double> positions;  // nm of arc length from the segment start
  std::vector<double> total;
  std::vector<double> incident;
  std::vector<double> backscattered;

  std::size_t size() const noexcept { return positions.size(); }
};

// Bilinear interpolation between cell centres. Points in the outer half
// cell take the value of the nearest centre row/column.
inline double sample_bilinear(const Grid2D& g, double x, double y) {
  const double extent_x = static_cast<double>(g.width) * g.pitch;
  const double extent_y = static_cast<double>(g.height) * g.pitch;
  const double tol = 1e-9 * std::max(extent_x, extent_y);
  if (!(x >= -tol && x <= extent_x + tol && y >= -tol && y <= extent_y + tol))
    throw ValidationError("trace", "point (" + std::to_string(x) + ", " + std::to_string(y) +
                                       ") lies outside the grid");
  const double u = std::clamp(x / g.pitch - 0.5, 0.0, static_cast<double>(g.width - 1));
  const double v = std::clamp(y / g.pitch - 0.5, 0.0, static_cast<double>(g.height - 1));
  const auto i0 = std::min(static_cast<std::size_t>(u), g.width > 1 ? g.width - 2 : 0);
  const auto j0 = std::min(static_cast<std::size_t>(v), g.height > 1 ? g.height - 2 : 0);
  const std::size_t i1 = std::min(i0 + 1, g.width - 1), j1 = std::min(j0 + 1, g.height - 1);
  const double fx = u - static_cast<double>(i0), fy = v - static_cast<double>(j0);
  const double a = g(i0, j0) * (1.0 - fx) + g(i1, j0) * fx;
  const double b = g(i0, j1) * (1.0 - fx) + g(i1, j1) * fx;
  return a * (1.0 - fy) + b * fy;
}

inline TraceProfile extract_trace(const DoseGrid& dose, const Segment& seg, std::size_t samples) {
  require(samples >= 2, "trace.samples", "must be at least 2");
  require(seg.length() > 0.0, "trace.segment", "must have positive length");
  TraceProfile t;
  const double len = seg.length();
  for (std::size_t k = 0; k < samples; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(samples - 1);
    const double x = seg.a.x + f * (seg.b.x - seg.a.x);
    const double y = seg.a.y + f * (seg.b.y - seg.a.y);
    t.positions.push_back(f * len);
    t.incident.push_back(sample_bilinear(dose.incident, x, y));
    t.backscattered.push_back(sample_bilinear(dose.backscattered, x, y));
    t.total.push_back(t.incident.back() + t.backscattered.back());
  }
  return t;
}

// Samples at a fixed spacing of roughly `step_nm`.
inline std::size_t samples_for(const Segment& seg, double step_nm) {
  return static_cast<std::size_t>(std::ceil(seg.length() / step_nm - 1e-9)) + 1;
}

inline void write_trace_csv(std::ostream& os, const TraceProfile& t,
                            const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "position_nm,total,incident,backscattered\n";
  auto f = text::format_double;
  for (std::size_t k = 0; k < t.size(); ++k)
    os << f(t.positions[k]) << ',' << f(t.total[k]) << ',' << f(t.incident[k]) << ','
       << f(t.backscattered[k]) << '\n';
}

}  // namespace ebl
