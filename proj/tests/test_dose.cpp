#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ebl/dose/convolve.hpp"
#include "ebl/dose/grid_io.hpp"
#include "ebl/dose/metrics.hpp"
#include "ebl/dose/trace.hpp"
#include "ebl/layout/geometry.hpp"
#include "ebl/layout/rasterize.hpp"
#include "support.hpp"

namespace ebl {
namespace {

DoseGrid constant_dose(std::size_t w, std::size_t h, double pitch, double inc, double bs) {
  DoseGrid d;
  d.incident = Grid2D(w, h, pitch, inc);
  d.backscattered = Grid2D(w, h, pitch, bs);
  d.total = Grid2D(w, h, pitch, inc + bs);
  return d;
}

TEST(Convolve, DeltaExposureEchoesKernel) {
  const auto k = test::small_kernel(10.0, 100.0);
  Grid2D e(41, 41, 10.0);
  e(20, 20) = 1.0;
  for (const auto& d : {convolve_direct(e, k), convolve_fast(e, k)}) {
    for (int dy = -10; dy <= 10; ++dy)
      for (int dx = -10; dx <= 10; ++dx) {
        const auto i = static_cast<std::size_t>(20 + dx), j = static_cast<std::size_t>(20 + dy);
        ASSERT_NEAR(d.incident(i, j), k.at(Channel::incident, dx, dy), 1e-12);
        ASSERT_NEAR(d.backscattered(i, j), k.at(Channel::backscattered, dx, dy), 1e-12);
      }
  }
}

TEST(Convolve, DeltaKernelIsIdentity) {
  const auto e = test::random_exposure(37, 23, 10.0, 5);
  const auto d = convolve_fast(e, PsfKernel::delta(10.0));
  EXPECT_LT(test::max_relative_difference(d.total, e), 1e-12);
  EXPECT_EQ(d.backscattered.max(), 0.0);
}

TEST(Convolve, FlatFieldLimit) {
  const auto k = test::small_kernel(10.0, 200.0);
  Grid2D e(101, 101, 10.0, 50.0);
  const auto d = convolve_fast(e, k);
  EXPECT_NEAR(d.total(50, 50) / (50.0 * k.integral()), 1.0, 1e-9);
}

TEST(Convolve, FastMatchesDirectOnRandomExposures) {
  const auto k = test::small_kernel(10.0, 320.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t w = 16 + seed * 11, h = 128 - seed * 7;
    const auto e = test::random_exposure(w, h, 10.0, seed);
    const auto fast = convolve_fast(e, k);
    const auto direct = convolve_direct(e, k, 2);
    for (auto c : {Channel::incident, Channel::backscattered})
      EXPECT_LT(test::max_relative_difference(fast.channel(c), direct.channel(c)), 1e-5) << "seed " << seed;
    EXPECT_LT(test::max_relative_difference(fast.total, direct.total), 1e-5);
  }
}

TEST(Convolve, SparseOracleMatchesFullDirect) {
  const auto k = test::small_kernel(10.0, 200.0);
  const auto e = test::random_exposure(50, 40, 10.0, 9);
  const auto d = convolve_direct(e, k);
  const std::vector<std::size_t> cells{0, 17, 999, 1999};
  const auto v = direct_total_at(e, k, cells);
  for (std::size_t q = 0; q < cells.size(); ++q) EXPECT_NEAR(v[q], d.total.values[cells[q]], 1e-9 * d.total.max());
}

TEST(Convolve, Linearity) {
  const auto k = test::small_kernel();
  const auto a = test::random_exposure(64, 64, 10.0, 1);
  const auto b = test::random_exposure(64, 64, 10.0, 2);
  Grid2D mix = a;
  for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] = 2.0 * a.values[i] + 0.5 * b.values[i];
  const auto da = convolve_fast(a, k), db = convolve_fast(b, k), dm = convolve_fast(mix, k);
  Grid2D expected = da.total;
  for (std::size_t i = 0; i < expected.values.size(); ++i)
    expected.values[i] = 2.0 * da.total.values[i] + 0.5 * db.total.values[i];
  EXPECT_LT(test::max_relative_difference(dm.total, expected), 1e-9);
}

TEST(Convolve, ChannelDecomposition) {
  const auto k = test::small_kernel();
  const auto e = test::random_exposure(64, 64, 10.0, 3);
  const auto full = convolve_fast(e, k);
  const auto inc = convolve_fast(e, k.only(Channel::incident));
  const auto bs = convolve_fast(e, k.only(Channel::backscattered));
  Grid2D sum = inc.total;
  sum += bs.total;
  EXPECT_LT(test::max_relative_difference(sum, full.total), 1e-6);
  for (std::size_t i = 0; i < full.total.values.size(); ++i) {
    ASSERT_NEAR(full.total.values[i], full.incident.values[i] + full.backscattered.values[i],
                1e-12 * full.total.max());
    ASSERT_GE(full.incident.values[i], 0.0);
    ASSERT_GE(full.backscattered.values[i], 0.0);
  }
}

TEST(Convolve, TranslationEquivariance) {
  const auto k = test::small_kernel(10.0, 150.0);
  Grid2D a(80, 80, 10.0), b(80, 80, 10.0);
  for (std::size_t j = 20; j < 30; ++j)
    for (std::size_t i = 15; i < 32; ++i) {
      a(i, j) = 1.0 + 0.1 * static_cast<double>(i);
      b(i + 9, j + 4) = a(i, j);
    }
  const auto da = convolve_fast(a, k), db = convolve_fast(b, k);
  for (std::size_t j = 0; j + 4 < 80; ++j)
    for (std::size_t i = 0; i + 9 < 80; ++i) ASSERT_NEAR(da.total(i, j), db.total(i + 9, j + 4), 1e-9);
}

TEST(Convolve, PitchMismatchIsRejected) {
  const auto k = test::small_kernel(10.0, 100.0);
  Grid2D e(10, 10, 5.0);
  EXPECT_THROW(convolve_fast(e, k), ValidationError);
  EXPECT_THROW(convolve_direct(e, k), ValidationError);
}

TEST(Convolve, PaddedSizesAreSmooth) {
  for (std::size_t n : {1u, 7u, 11u, 13u, 97u, 1801u}) {
    std::size_t m = detail::fft_size(n);
    EXPECT_GE(m, n);
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (m % p == 0) m /= p;
    EXPECT_EQ(m, 1u);
  }
}

TEST(Trace, ConstantGridGivesConstantTrace) {
  const auto d = constant_dose(30, 30, 10.0, 3.0, 1.5);
  const auto t = extract_trace(d, {{5.0, 5.0}, {290.0, 170.0}}, 57);
  ASSERT_EQ(t.size(), 57u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_DOUBLE_EQ(t.total[k], 4.5);
    if (k) {
      EXPECT_GT(t.positions[k], t.positions[k - 1]);
    }
  }
}

TEST(Trace, FollowsAnalyticKernel) {
  const auto p = test::analytic_psf();
  const auto k = build_kernel(p, 10.0, 1000.0);
  Grid2D e(201, 201, 10.0);
  e(100, 100) = 1.0;
  const auto d = convolve_fast(e, k);
  // Along the row through the source, at cell centres beyond the sub-sampled core.
  const auto t = extract_trace(d, {{1305.0, 1005.0}, {1905.0, 1005.0}}, 61);
  for (std::size_t q = 0; q < t.size(); ++q) {
    const double r = 300.0 + t.positions[q];
    const double closed = p.backscattered_density(r) * 100.0;
    ASSERT_NEAR(t.backscattered[q] / closed, 1.0, 1e-3) << "r = " << r;
  }
}

TEST(Trace, OutOfBoundsIsRejected) {
  const auto d = constant_dose(10, 10, 10.0, 1.0, 0.0);
  EXPECT_THROW(extract_trace(d, {{5.0, 5.0}, {150.0, 5.0}}, 10), ValidationError);
  EXPECT_THROW(extract_trace(d, {{5.0, 5.0}, {50.0, 5.0}}, 1), ValidationError);
}

ProbeLines centred_probes(double cx, double cy) {
  ProbeLines p;
  p.vertical = {{cx, cy - 350.0}, {cx, cy + 350.0}};
  p.horizontal = {{cx - 100.0, cy}, {cx + 100.0, cy}};
  return p;
}

TEST(Metrics, UniformDose) {
  const auto d = constant_dose(100, 100, 10.0, 2.0, 6.0);
  const auto m = compute_metrics(d, centred_probes(500.0, 500.0));
  EXPECT_DOUBLE_EQ(m.falloff_ratio, 1.0);
  EXPECT_DOUBLE_EQ(m.saddle_variance, 0.0);
  EXPECT_DOUBLE_EQ(m.edge_drop.ratio, 1.0);
  EXPECT_DOUBLE_EQ(m.eb_ei_center, 3.0);
  EXPECT_FALSE(m.eb_ei_infinite);
}

TEST(Metrics, ZeroIncidentGivesInfiniteFlag) {
  const auto d = constant_dose(100, 100, 10.0, 0.0, 6.0);
  const auto m = compute_metrics(d, centred_probes(500.0, 500.0));
  EXPECT_TRUE(m.eb_ei_infinite);
  EXPECT_TRUE(std::isinf(m.eb_ei_center));
  std::ostringstream os;
  write_metrics_csv(os, m);
  EXPECT_NE(os.str().find("eb_ei_center,inf"), std::string::npos);
}

TEST(Metrics, RatiosAreInvariantUnderDoseScaling) {
  // A broad forward term keeps the incident dose at the gap centre well
  // above round-off.
  auto psf = test::analytic_psf();
  psf.forward_sigma_nm = 60.0;
  const auto k = build_kernel(psf, 10.0, 1000.0);
  for (auto kind : {GeometryKind::thin_dolan, GeometryKind::horseshoe}) {
    GeometryParams p;
    const auto ref = build_geometry(kind, p);
    p.base_dose = 3.7 * p.base_dose;
    const auto scaled = build_geometry(kind, p);
    const auto a = compute_metrics(convolve_fast(rasterize(ref.layout, 10.0), k), ref.probes);
    const auto b = compute_metrics(convolve_fast(rasterize(scaled.layout, 10.0), k), scaled.probes);
    EXPECT_NEAR(a.falloff_ratio / b.falloff_ratio, 1.0, 1e-9);
    EXPECT_NEAR(a.edge_drop.ratio / b.edge_drop.ratio, 1.0, 1e-9);
    EXPECT_NEAR(a.eb_ei_center / b.eb_ei_center, 1.0, 1e-9);
    EXPECT_NEAR(a.saddle_variance / b.saddle_variance, 1.0, 1e-9);
    EXPECT_NEAR(b.center_total / a.center_total, 3.7, 1e-9);
    EXPECT_GE(a.falloff_ratio, 1.0);
    EXPECT_GE(a.edge_drop.ratio, 1.0);
  }
}

// Raising the booster dose lifts the bridge centre while the gap edges,
// dominated by the adjacent electrodes, move by a smaller relative amount.
TEST(Metrics, BoosterLocality) {
  const auto k = test::small_kernel(10.0, 2000.0);
  auto doses = [&](double factor) {
    GeometryParams p;
    p.booster_factor = factor;
    const auto geo = build_geometry(GeometryKind::x_junction, p);
    const auto d = convolve_fast(rasterize(geo.layout, 10.0), k);
    const auto c = geo.probes.center();
    const double edge = sample_bilinear(d.total, c.x, c.y + 0.5 * geo.probes.bridge_extent);
    return std::pair{sample_bilinear(d.total, c.x, c.y), edge};
  };
  const auto [c1, e1] = doses(1.0);
  const auto [c4, e4] = doses(4.0);
  EXPECT_GT(c4, c1);
  EXPECT_LT((e4 - e1) / e1, (c4 - c1) / c1);
}

TEST(GridIo, RoundTripAtFloatPrecision) {
  const auto g = test::random_exposure(31, 17, 2.5, 4);
  std::stringstream ss;
  write_grid(ss, g);
  EXPECT_EQ(ss.str().size(), 4 + 4 + 8 + 4 + 4 + 4 * g.values.size());
  const auto back = read_grid(ss);
  EXPECT_EQ(back.width, 31u);
  EXPECT_EQ(back.height, 17u);
  EXPECT_EQ(back.pitch, 2.5);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    ASSERT_EQ(back.values[i], static_cast<double>(static_cast<float>(g.values[i])));
}

TEST(GridIo, BadInputIsFormatError) {
  std::istringstream magic("NOPE1234");
  EXPECT_THROW(read_grid(magic), FormatError);
  std::stringstream ss;
  write_grid(ss, Grid2D(4, 4, 1.0, 1.0));
  auto bytes = ss.str();
  bytes.pop_back();
  std::istringstream truncated(bytes);
  EXPECT_THROW(read_grid(truncated), FormatError);
}

TEST(GridIo, PgmHeader) {
  Grid2D g(3, 2, 1.0);
  g(2, 1) = 4.0;
  std::ostringstream os;
  write_pgm(os, g, {"seed = 1"});
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, 3), "P5\n");
  EXPECT_NE(s.find("# seed = 1\n3 2\n255\n"), std::string::npos);
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 6 + 2]), 255);  // top row holds the maximum
}

}  // namespace
}  // namespace ebl
