#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/layout/polygon.hpp"

namespace ebl {

struct Shape {
  Polygon polygon;     // nm
  double dose_factor = 1.0;
  std::string tag;
};

struct PatternLayout {
  std::vector<Shape> shapes;
  double base_dose = 1.0;  // uC/cm^2
  double width = 10000.0;  // nm
  double height = 10000.0;

  void validate() const {
    require(base_dose > 0.0 && std::isfinite(base_dose), "layout.base_dose", "must be positive");
    require(width > 0.0 && height > 0.0, "layout.bounds", "must be positive");
    for (const auto& s : shapes) {
      require(s.dose_factor > 0.0 && std::isfinite(s.dose_factor), "layout.shape.dose_factor",
              "must be positive (shape '" + s.tag + "')");
      if (s.polygon.size() < 3) throw GeometryError(s.tag, "polygon needs at least 3 vertices");
      for (const auto& p : s.polygon) {
        if (!(p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height))
          throw GeometryError(s.tag, "vertex outside the layout bounds");
      }
      if (!is_simple(s.polygon)) throw GeometryError(s.tag, "polygon is not simple");
    }
  }

  double exposed_area() const {
    double a = 0.0;
    for (const auto& s : shapes) a += area(s.polygon);
    return a;
  }
};

struct Segment {
  Point a;
  Point b;
  double length() const { return std::hypot(b.x - a.x, b.y - a.y); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Traces through the unexposed bridge. The vertical segment crosses the gap
// and extends `exposed_margin` into the exposed electrodes on both sides;
// the horizontal one runs along the gap centre line.
struct ProbeLines {
  Segment vertical;
  Segment horizontal;
  double bridge_extent = 300.0;   // nm, unexposed gap length along the vertical trace
  double exposed_margin = 200.0;  // nm

  Point center() const {
    return {0.5 * (vertical.a.x + vertical.b.x), 0.5 * (vertical.a.y + vertical.b.y)};
  }

  void validate() const {
    require(bridge_extent > 0.0, "probes.bridge_extent", "must be positive");
    require(exposed_margin >= 0.0, "probes.exposed_margin", "must be non-negative");
    require(vertical.length() > bridge_extent, "probes.vertical",
            "must be longer than the bridge extent");
    require(horizontal.length() > 0.0, "probes.horizontal", "must have positive length");
    const Point c = center();
    const Point h{0.5 * (horizontal.a.x + horizontal.b.x), 0.5 * (horizontal.a.y + horizontal.b.y)};
    require(std::hypot(c.x - h.x, c.y - h.y) < 1e-6 * std::max(1.0, vertical.length()),
            "probes", "vertical and horizontal traces must share their midpoint");
  }

  friend bool operator==(const ProbeLines&, const ProbeLines&) = default;
};

// A layout file: the pattern plus optional probe lines.
struct LayoutDocument {
  PatternLayout layout;
  std::optional<ProbeLines> probes;
};

}  // namespace ebl
