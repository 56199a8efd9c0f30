#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ebl/layout/geometry.hpp"
#include "ebl/layout/layout_io.hpp"
#include "ebl/layout/rasterize.hpp"
#include "support.hpp"

namespace ebl {
namespace {

constexpr GeometryKind kAllKinds[] = {GeometryKind::thin_dolan, GeometryKind::l_shape,
                                      GeometryKind::horseshoe, GeometryKind::x_junction};

PatternLayout single(Polygon poly, double width = 1000.0, double height = 1000.0) {
  PatternLayout l;
  l.width = width;
  l.height = height;
  l.shapes.push_back({std::move(poly), 1.0, "s"});
  return l;
}

TEST(Polygon, ShoelaceArea) {
  EXPECT_DOUBLE_EQ(area(rectangle(0, 0, 30, 20)), 600.0);
  EXPECT_DOUBLE_EQ(signed_area({{0, 0}, {10, 0}, {0, 10}}), 50.0);
  EXPECT_DOUBLE_EQ(signed_area({{0, 0}, {0, 10}, {10, 0}}), -50.0);
}

TEST(Polygon, SimplicityCheck) {
  EXPECT_TRUE(is_simple(rectangle(0, 0, 1, 1)));
  EXPECT_FALSE(is_simple({{0, 0}, {10, 10}, {10, 0}, {0, 10}}));  // bow tie
}

TEST(Rasterize, AlignedSquareIsExact) {
  const auto g = rasterize(single(rectangle(200, 300, 300, 400)), 10.0);
  EXPECT_EQ(g.width, 100u);
  EXPECT_EQ(g.height, 100u);
  int full = 0;
  for (double v : g.values) {
    if (v == 1.0) ++full;
    else ASSERT_EQ(v, 0.0);
  }
  EXPECT_EQ(full, 100);
  EXPECT_DOUBLE_EQ(g.sum() * 100.0, 10000.0);
}

TEST(Rasterize, TriangleAreaWithinTenthPercent) {
  const Polygon tri{{123.4, 87.1}, {911.7, 240.3}, {402.2, 833.9}};
  const auto g = rasterize(single(tri), 10.0);
  EXPECT_NEAR(g.sum() * 100.0 / area(tri), 1.0, 1e-3);
  for (double v : g.values) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0 + 1e-12);
  }
}

TEST(Rasterize, AppliedDoseConservedForEveryGeometry) {
  for (auto kind : kAllKinds) {
    const auto geo = build_geometry(kind);
    const auto g = rasterize(geo.layout, 10.0);
    double expected = 0.0;
    for (const auto& s : geo.layout.shapes) expected += area(s.polygon) * s.dose_factor * geo.layout.base_dose;
    EXPECT_NEAR(g.sum() * 100.0 / expected, 1.0, 1e-3) << to_string(kind);
  }
}

TEST(Rasterize, VertexReversalInvariance) {
  Polygon poly{{105, 120}, {640, 95}, {700, 600}, {400, 420}, {130, 700}};
  const auto a = rasterize(single(poly), 10.0);
  std::reverse(poly.begin(), poly.end());
  const auto b = rasterize(single(poly), 10.0);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Rasterize, TranslationEquivariance) {
  const Polygon poly{{105, 120}, {440, 95}, {400, 400}, {130, 300}};
  const auto a = rasterize(single(poly), 10.0);
  const auto b = rasterize(single(translated(poly, 70.0, 130.0)), 10.0);
  for (std::size_t j = 0; j + 13 < a.height; ++j)
    for (std::size_t i = 0; i + 7 < a.width; ++i) ASSERT_NEAR(a(i, j), b(i + 7, j + 13), 1e-12);
}

TEST(Rasterize, FullFieldGridSize) {
  const auto geo = build_geometry(GeometryKind::thin_dolan);
  const auto g = rasterize(geo.layout, 10.0);
  EXPECT_EQ(g.width, 1000u);
  EXPECT_EQ(g.height, 1000u);
}

TEST(Geometry, BridgeGapIsUnexposed) {
  for (auto kind : kAllKinds) {
    const auto geo = build_geometry(kind);
    const auto g = rasterize(geo.layout, 10.0);
    const auto c = geo.probes.center();
    const double half = 0.5 * geo.probes.bridge_extent;
    const double hw = 0.5 * geo.probes.horizontal.length();
    for (std::size_t j = 0; j < g.height; ++j) {
      for (std::size_t i = 0; i < g.width; ++i) {
        const double x0 = i * 10.0, y0 = j * 10.0;
        if (x0 >= c.x - hw && x0 + 10.0 <= c.x + hw && y0 >= c.y - half && y0 + 10.0 <= c.y + half) {
          ASSERT_EQ(g(i, j), 0.0) << to_string(kind) << " cell " << i << "," << j;
        }
      }
    }
  }
}

TEST(Geometry, BoosterDoseRatio) {
  const auto geo = build_geometry(GeometryKind::x_junction);
  const auto g = rasterize(geo.layout, 10.0);
  int boosters = 0;
  for (const auto& s : geo.layout.shapes) {
    if (s.tag != "booster") continue;
    ++boosters;
    const auto c = centroid(s.polygon);
    const auto i = static_cast<std::size_t>(c.x / 10.0), j = static_cast<std::size_t>(c.y / 10.0);
    EXPECT_DOUBLE_EQ(g(i, j), 4.0 * geo.layout.base_dose);
  }
  EXPECT_EQ(boosters, 4);
  // Any cell fully inside an electrode carries the base dose.
  EXPECT_DOUBLE_EQ(g(500, 300), geo.layout.base_dose);
}

TEST(Geometry, HorseshoeHasMoreNearbyExposure) {
  auto near_area = [](GeometryKind kind) {
    const auto geo = build_geometry(kind);
    const auto g = rasterize(geo.layout, 10.0);
    const auto c = geo.probes.center();
    double a = 0.0;
    for (std::size_t j = 0; j < g.height; ++j)
      for (std::size_t i = 0; i < g.width; ++i)
        if (std::hypot((i + 0.5) * 10.0 - c.x, (j + 0.5) * 10.0 - c.y) <= 4000.0) a += g(i, j) * 100.0;
    return a / geo.layout.base_dose;
  };
  const double thin = near_area(GeometryKind::thin_dolan);
  const double l = near_area(GeometryKind::l_shape);
  const double horseshoe = near_area(GeometryKind::horseshoe);
  EXPECT_GT(horseshoe, thin);
  EXPECT_GT(l, thin);
  EXPECT_GT(horseshoe, l);
}

TEST(Geometry, ParameterValidation) {
  GeometryParams p;
  p.gap = 50.0;
  EXPECT_THROW(build_geometry(GeometryKind::horseshoe, p), ValidationError);
  p = {};
  p.arm_width = 20.0;
  EXPECT_THROW(build_geometry(GeometryKind::horseshoe, p), ValidationError);
  p = {};
  EXPECT_THROW(set_geometry_param(p, "nonsense", 1.0), ValidationError);
  set_geometry_param(p, "gap", 200.0);
  EXPECT_DOUBLE_EQ(p.gap, 200.0);
  EXPECT_EQ(geometry_from_string("l-shape"), GeometryKind::l_shape);
  EXPECT_FALSE(geometry_from_string("spiral").has_value());
}

TEST(Geometry, ProbesCrossTheBridgeCentre) {
  for (auto kind : kAllKinds) {
    const auto geo = build_geometry(kind);
    const auto c = geo.probes.center();
    EXPECT_DOUBLE_EQ(c.x, 5000.0);
    EXPECT_DOUBLE_EQ(c.y, 5000.0);
    EXPECT_DOUBLE_EQ(geo.probes.vertical.length(), 300.0 + 2 * 200.0);
  }
}

TEST(LayoutIo, RoundTripForEveryGeometry) {
  for (auto kind : kAllKinds) {
    const auto geo = build_geometry(kind);
    const std::string text = layout_to_string({geo.layout, geo.probes});
    const auto doc = parse_layout_string(text);
    EXPECT_EQ(layout_to_string(doc), text) << to_string(kind);
    ASSERT_TRUE(doc.probes.has_value());
    EXPECT_EQ(*doc.probes, geo.probes);
  }
}

TEST(LayoutIo, CanonicalFormattingIsStable) {
  const std::string loose =
      "# hand-written\nebl-layout 1\nbounds 1000   1000\nbase_dose 500\n\nshape pad 1.5\n"
      "  0 0\n  100 0\n  100.0 100\n  0 100\nend\n";
  const auto doc = parse_layout_string(loose);
  const auto canonical = layout_to_string(doc);
  EXPECT_EQ(layout_to_string(parse_layout_string(canonical)), canonical);
  EXPECT_DOUBLE_EQ(doc.layout.shapes.at(0).dose_factor, 1.5);
  EXPECT_FALSE(doc.probes.has_value());
}

TEST(LayoutIo, RejectsZeroDoseFactor) {
  EXPECT_THROW(parse_layout_string("ebl-layout 1\nbounds 100 100\nbase_dose 1\nshape a 0\n  0 0\n  10 0\n  0 10\nend\n"),
               Error);
}

TEST(LayoutIo, MalformedLineHasPosition) {
  try {
    parse_layout_string("ebl-layout 1\nbounds 100 100\nbase_dose 1\nshape a 1\n  0 zero\nend\n", "t.layout");
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_GT(e.column(), 1u);
  }
}

TEST(LayoutIo, SelfIntersectionNamesShape) {
  try {
    parse_layout_string(
        "ebl-layout 1\nbounds 100 100\nbase_dose 1\nshape bowtie 1\n  0 0\n  10 10\n  10 0\n  0 10\nend\n");
    FAIL() << "expected a geometry error";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.shape(), "bowtie");
  }
}

TEST(LayoutIo, ShippedSamplesMatchBuilders) {
  for (auto [file, kind] : {std::pair{"horseshoe", GeometryKind::horseshoe},
                            std::pair{"thin-dolan", GeometryKind::thin_dolan}}) {
    const auto doc = load_layout(std::string(EBL_SOURCE_DIR) + "/configs/" + file + ".layout");
    const auto geo = build_geometry(kind);
    EXPECT_EQ(layout_to_string(doc), layout_to_string({geo.layout, geo.probes})) << file;
  }
}

TEST(LayoutIo, MissingFileIsIoError) {
  EXPECT_THROW(load_layout("/nonexistent/x.layout"), IoError);
}

}  // namespace
}  // namespace ebl
