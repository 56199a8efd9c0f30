#pragma once

// Built-in junction designs. All share one frame: a 10 x 10 um field with the
// bridge centred at (5000, 5000) nm and the unexposed gap running along x, so
// the two electrodes face each other across y.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/layout/layout.hpp"

namespace ebl {

enum class GeometryKind { thin_dolan, l_shape, horseshoe, x_junction };

inline std::string_view to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::thin_dolan: return "thin-dolan";
    case GeometryKind::l_shape: return "l-shape";
    case GeometryKind::horseshoe: return "horseshoe";
    case GeometryKind::x_junction: return "x-junction";
  }
  return "?";
}

inline std::optional<GeometryKind> geometry_from_string(std::string_view s) {
  for (auto k : {GeometryKind::thin_dolan, GeometryKind::l_shape, GeometryKind::horseshoe,
                 GeometryKind::x_junction})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

// Dimensions in nm. Defaults are approximations of the published drawings;
// absolute junction sizes were never given.
struct GeometryParams {
  double gap = 300.0;            // unexposed bridge length along y
  double finger_width = 200.0;   // electrode width where it meets the gap
  double finger_length = 2500.0; // thin electrode run from the gap to its lead pad
  double pad_width = 800.0;
  double pad_length = 500.0;
  double neck_length = 400.0;    // narrow run of the L / horseshoe upper electrode before it widens
  double cap_height = 600.0;     // solid block of the wide (L / horseshoe) electrode
  double arm_width = 500.0;      // width of the L / horseshoe arms
  double arm_spacing = 400.0;    // clearance between the narrow finger and an arm
  double arm_drop = 1000.0;      // how far the arms reach below the gap
  double booster_size = 600.0;
  double booster_offset = 1200.0;  // booster centre distance from the bridge centre, per axis
  double booster_factor = 4.0;
  double base_dose = 600.0;      // uC/cm^2
  double probe_margin = 200.0;   // trace extension into the exposed electrodes

  double field = 10000.0;

  void validate() const {
    require(gap >= 100.0 && gap <= 500.0, "geometry.gap", "must be within [100, 500] nm");
    require(finger_width >= 50.0, "geometry.finger_width", "must be at least 50 nm");
    require(arm_width >= 50.0, "geometry.arm_width", "must be at least 50 nm");
    require(pad_width >= finger_width, "geometry.pad_width", "must be at least the finger width");
    require(pad_length > 0.0, "geometry.pad_length", "must be positive");
    require(neck_length > 0.0, "geometry.neck_length", "must be positive");
    require(cap_height >= 50.0, "geometry.cap_height", "must be at least 50 nm");
    require(neck_length + cap_height > probe_margin, "geometry.cap_height",
            "upper electrode must extend past the probe margin");
    require(finger_length > probe_margin, "geometry.finger_length",
            "must exceed the probe margin");
    require(arm_spacing > 0.0, "geometry.arm_spacing", "must be positive");
    require(arm_drop >= 0.0, "geometry.arm_drop", "must be non-negative");
    require(booster_size >= 50.0, "geometry.booster_size", "must be at least 50 nm");
    require(booster_offset - 0.5 * booster_size > 0.5 * finger_width, "geometry.booster_offset",
            "boosters would overlap the fingers");
    require(booster_factor > 0.0, "geometry.booster_factor", "must be positive");
    require(base_dose > 0.0, "geometry.base_dose", "must be positive");
    require(probe_margin >= 100.0, "geometry.probe_margin", "must be at least 100 nm");
    const double reach = 0.5 * gap + std::max(finger_length + pad_length, neck_length + cap_height);
    require(reach < 0.5 * field, "geometry", "design does not fit the 10 um field");
    require(0.5 * finger_width + arm_spacing + arm_width < 0.5 * field, "geometry",
            "arms do not fit the field");
  }
};

// Name -> member table for overriding parameters from text.
inline const std::vector<std::pair<std::string_view, double GeometryParams::*>>& geometry_fields() {
  static const std::vector<std::pair<std::string_view, double GeometryParams::*>> fields = {
      {"gap", &GeometryParams::gap},
      {"finger_width", &GeometryParams::finger_width},
      {"finger_length", &GeometryParams::finger_length},
      {"pad_width", &GeometryParams::pad_width},
      {"pad_length", &GeometryParams::pad_length},
      {"neck_length", &GeometryParams::neck_length},
      {"cap_height", &GeometryParams::cap_height},
      {"arm_width", &GeometryParams::arm_width},
      {"arm_spacing", &GeometryParams::arm_spacing},
      {"arm_drop", &GeometryParams::arm_drop},
      {"booster_size", &GeometryParams::booster_size},
      {"booster_offset", &GeometryParams::booster_offset},
      {"booster_factor", &GeometryParams::booster_factor},
      {"base_dose", &GeometryParams::base_dose},
      {"probe_margin", &GeometryParams::probe_margin},
  };
  return fields;
}

inline void set_geometry_param(GeometryParams& p, std::string_view name, double value) {
  for (const auto& [key, member] : geometry_fields()) {
    if (key == name) {
      p.*member = value;
      return;
    }
  }
  throw ValidationError("geometry." + std::string(name), "unknown geometry parameter");
}

struct Geometry {
  PatternLayout layout;
  ProbeLines probes;
};

namespace detail {

inline ProbeLines standard_probes(const GeometryParams& p, double cx, double cy) {
  ProbeLines probes;
  const double hv = 0.5 * p.gap + p.probe_margin;
  const double hh = 0.5 * p.finger_width;
  probes.vertical = {{cx, cy - hv}, {cx, cy + hv}};
  probes.horizontal = {{cx - hh, cy}, {cx + hh, cy}};
  probes.bridge_extent = p.gap;
  probes.exposed_margin = p.probe_margin;
  return probes;
}

// A finger of width w running from the gap face at y0 by `length` in
// direction `dir` (+1 up, -1 down), ending in a centred pad.
inline Polygon finger_with_pad(double cx, double y0, int dir, const GeometryParams& p) {
  const double hw = 0.5 * p.finger_width, hp = 0.5 * p.pad_width;
  const double y1 = y0 + dir * p.finger_length;
  const double y2 = y1 + dir * p.pad_length;
  Polygon poly = {{cx - hw, y0}, {cx + hw, y0}, {cx + hw, y1}, {cx + hp, y1},
                  {cx + hp, y2}, {cx - hp, y2}, {cx - hp, y1}, {cx - hw, y1}};
  if (dir < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

}  // namespace detail

// thin-dolan: two narrow fingers meeting across the gap, each fed from a
// distant pad.
// l-shape: the upper finger opens after a short neck into a block with one
// arm folding down beside the lower finger.
// horseshoe: as l-shape with arms on both sides, wrapping the junction.
// x-junction: thin-dolan plus four diagonal boosters at an elevated dose factor.
inline Geometry build_geometry(GeometryKind kind, const GeometryParams& p = {}) {
  p.validate();
  const double cx = 0.5 * p.field, cy = 0.5 * p.field;
  const double top = cy + 0.5 * p.gap, bottom = cy - 0.5 * p.gap;

  Geometry g;
  g.layout.width = g.layout.height = p.field;
  g.layout.base_dose = p.base_dose;
  g.probes = detail::standard_probes(p, cx, cy);
  auto add = [&](Polygon poly, std::string tag, double factor = 1.0) {
    g.layout.shapes.push_back({std::move(poly), factor, std::move(tag)});
  };

  add(detail::finger_with_pad(cx, bottom, -1, p), "lower_electrode");

  const double inner = 0.5 * p.finger_width + p.arm_spacing;
  const double outer = inner + p.arm_width;
  const double hw = 0.5 * p.finger_width;
  const double neck = top + p.neck_length;
  const double cap_top = neck + p.cap_height;
  const double arm_bottom = bottom - p.arm_drop;
  switch (kind) {
    case GeometryKind::thin_dolan:
    case GeometryKind::x_junction:
      add(detail::finger_with_pad(cx, top, +1, p), "upper_electrode");
      break;
    case GeometryKind::l_shape:
      add({{cx - hw, top},
           {cx + hw, top},
           {cx + hw, neck},
           {cx + inner, neck},
           {cx + inner, arm_bottom},
           {cx + outer, arm_bottom},
           {cx + outer, cap_top},
           {cx - hw, cap_top}},
          "upper_electrode");
      break;
    case GeometryKind::horseshoe:
      add({{cx - hw, top},
           {cx + hw, top},
           {cx + hw, neck},
           {cx + inner, neck},
           {cx + inner, arm_bottom},
           {cx + outer, arm_bottom},
           {cx + outer, cap_top},
           {cx - outer, cap_top},
           {cx - outer, arm_bottom},
           {cx - inner, arm_bottom},
           {cx - inner, neck},
           {cx - hw, neck}},
          "upper_electrode");
      break;
  }

  if (kind == GeometryKind::x_junction) {
    const double h = 0.5 * p.booster_size, d = p.booster_offset;
    for (auto [sx, sy] : {std::pair{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}) {
      const double bx = cx + sx * d, by = cy + sy * d;
      add(rectangle(bx - h, by - h, bx + h, by + h), "booster", p.booster_factor);
    }
  }
  g.layout.validate();
  g.probes.validate();
  return g;
}

}  // namespace ebl
