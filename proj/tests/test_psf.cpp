#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ebl/psf/fit.hpp"
#include "ebl/psf/kernel.hpp"
#include "ebl/psf/psf_io.hpp"
#include "ebl/psf/radial_psf.hpp"
#include "support.hpp"

namespace ebl {
namespace {

DepositionRecord record_of(std::vector<DepositionEvent> events, std::uint64_t trajectories = 1) {
  DepositionRecord r;
  r.events = std::move(events);
  r.summary.trajectories = trajectories;
  r.layer_boundaries_nm = {0.0, 230.0, 730.0};
  return r;
}

DepositionEvent event(double x, double y, double z, double e, Channel c = Channel::incident) {
  return {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), static_cast<float>(e), c};
}

TEST(RadialPsf, SingleEventAtOriginFillsFirstBin) {
  const auto psf = build_radial_psf(record_of({event(0, 0, 10, 500)}));
  EXPECT_GT(psf.incident[0], 0.0);
  for (std::size_t k = 1; k < psf.bins(); ++k) EXPECT_EQ(psf.incident[k], 0.0);
  EXPECT_NEAR(psf.incident[0] * psf.annulus_area(0), 500.0, 1e-9);
}

TEST(RadialPsf, EmptyRecordIsRejected) {
  EXPECT_THROW(build_radial_psf(record_of({})), ValidationError);
  RadialBinning few;
  few.count = 4;
  EXPECT_THROW(few.validate(), ValidationError);
}

// Events drawn from an areal density proportional to r^-0.77 on [10, 10000] nm.
TEST(RadialPsf, RecoversSampledPowerLaw) {
  const double b = 0.77, r0 = 10.0, r1 = 10000.0, e = 1.0;
  const double p = 2.0 - b;  // radial pdf ~ r^(1-b)
  const std::size_t n = 400000;
  Rng rng(17);
  std::vector<DepositionEvent> events;
  events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double r = std::pow(std::pow(r0, p) + u * (std::pow(r1, p) - std::pow(r0, p)), 1.0 / p);
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    events.push_back(event(r * std::cos(phi), r * std::sin(phi), 100.0, e, Channel::backscattered));
  }
  const auto psf = build_radial_psf(record_of(events));
  int checked = 0;
  for (std::size_t k = 0; k < psf.bins(); ++k) {
    const double lo = psf.edges[k], hi = psf.edges[k + 1];
    if (lo < r0 || hi > r1) continue;
    const double expected_count =
        n * (std::pow(hi, p) - std::pow(lo, p)) / (std::pow(r1, p) - std::pow(r0, p));
    if (expected_count < 200.0) continue;
    const double expected_density = expected_count * e / psf.annulus_area(k);
    const double sigma = expected_density / std::sqrt(expected_count);
    EXPECT_NEAR(psf.backscattered[k], expected_density, 5.0 * sigma) << "bin " << k;
    ++checked;
  }
  EXPECT_GT(checked, 40);
  const auto fit = fit_power_law(psf, Channel::backscattered, 60.0, 360.0);
  EXPECT_NEAR(fit.b, b, 0.03);
}

TEST(RadialPsf, TableIntegralsEqualDepositedEnergy) {
  Rng rng(2);
  std::vector<DepositionEvent> events;
  double inc = 0.0, bs = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double r = 60000.0 * rng.uniform() * rng.uniform();
    const double e = 1.0 + 100.0 * rng.uniform();
    const auto c = i % 3 ? Channel::incident : Channel::backscattered;
    const auto ev = event(r, 0.0, 700.0 * rng.uniform(), e, c);
    (c == Channel::incident ? inc : bs) += ev.energy_ev;
    events.push_back(ev);
  }
  const auto psf = build_radial_psf(record_of(events, 5));
  EXPECT_NEAR((psf.integral(Channel::incident) + psf.overflow(Channel::incident)) * 5, inc, 1e-6 * inc);
  EXPECT_NEAR((psf.integral(Channel::backscattered) + psf.overflow(Channel::backscattered)) * 5, bs,
              1e-6 * bs);
  EXPECT_NEAR(psf.reference_energy_ev * 5, inc + bs, 1e-6 * (inc + bs));
}

TEST(RadialPsf, ChannelAdditivityAndMergeOrder) {
  Rng rng(4);
  std::vector<DepositionEvent> events, relabelled;
  for (int i = 0; i < 5000; ++i) {
    const auto c = rng.uniform() < 0.4 ? Channel::backscattered : Channel::incident;
    events.push_back(event(3000.0 * rng.uniform(), 50.0, 700.0 * rng.uniform(), 10.0 * rng.uniform() + 1.0, c));
    relabelled.push_back(events.back());
    relabelled.back().channel = Channel::incident;
  }
  RadialBinning binning;
  const auto split = accumulate(record_of(events), binning);
  const auto all = accumulate(record_of(relabelled), binning);
  for (int region : {RadialAccumulator::kAllResist, 0, 1})
    for (std::size_t k = 0; k < binning.count; ++k)
      ASSERT_EQ(split.units(region, Channel::incident, k) + split.units(region, Channel::backscattered, k),
                all.units(region, Channel::incident, k));

  RadialAccumulator a(binning, {0.0, 230.0, 730.0}), b(binning, {0.0, 230.0, 730.0});
  for (std::size_t i = 0; i < events.size(); ++i) (i % 2 ? a : b).add(events[i]);
  RadialAccumulator ab, ba;
  ab.merge(a);
  ab.merge(b);
  ba.merge(b);
  ba.merge(a);
  for (std::size_t k = 0; k < binning.count; ++k) {
    ASSERT_EQ(ab.units(-1, Channel::incident, k), ba.units(-1, Channel::incident, k));
    ASSERT_EQ(ab.units(-1, Channel::incident, k), split.units(-1, Channel::incident, k));
  }
}

TEST(RadialPsf, LayerTablesPartitionTheResist) {
  const auto psf0 = build_layer_psf(record_of({event(5, 0, 100, 10), event(5, 0, 500, 30)}), 0);
  const auto psf1 = build_layer_psf(record_of({event(5, 0, 100, 10), event(5, 0, 500, 30)}), 1);
  EXPECT_NEAR(psf0.integral(Channel::incident), 10.0, 1e-9);
  EXPECT_NEAR(psf1.integral(Channel::incident), 30.0, 1e-9);
  EXPECT_DOUBLE_EQ(psf0.depth_extent_nm, 230.0);
  EXPECT_DOUBLE_EQ(psf1.depth_extent_nm, 500.0);
  EXPECT_DOUBLE_EQ(psf0.resist_thickness_nm, 730.0);
}

TEST(PowerLawFit, RecoversExactTable) {
  for (auto [a, b] : {std::pair{1.13e-4, 0.77}, std::pair{2.5, 0.3}, std::pair{7e-9, 2.1}}) {
    const auto psf = test::synthetic_table(a, b);
    const auto fit = fit_power_law(psf, Channel::backscattered, 60.0, 360.0);
    EXPECT_NEAR(fit.a / a, 1.0, 1e-6);
    EXPECT_NEAR(fit.b / b, 1.0, 1e-6);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
    EXPECT_GE(fit.points, 5u);
  }
}

TEST(PowerLawFit, ConstantDensityHasZeroExponent) {
  std::vector<double> r, d;
  for (int i = 1; i <= 20; ++i) {
    r.push_back(50.0 * i);
    d.push_back(3.0);
  }
  const auto fit = fit_power_law(r, d, 50.0, 1000.0);
  EXPECT_NEAR(fit.b, 0.0, 1e-9);
  EXPECT_NEAR(fit.a, 3.0, 1e-9);
}

TEST(PowerLawFit, TooFewPositiveBins) {
  std::vector<double> r{60, 100, 200, 300}, d{1, 1, 1, 1};
  EXPECT_THROW(fit_power_law(r, d, 50.0, 400.0), NumericError);
  EXPECT_THROW(fit_power_law(r, d, 400.0, 50.0), ValidationError);
}

TEST(AngularFit, DeltaDistribution) {
  std::vector<BackscatterExit> exits(1000, BackscatterExit{43.0, 100.0, 5.0});
  const auto fit = fit_angular(exits, 45);
  EXPECT_NEAR(fit.mu_deg, 43.0, 1.0);
  EXPECT_LE(fit.sigma_deg, 2.0);
  EXPECT_GT(fit.sigma_deg, 0.0);
}

TEST(AngularFit, RecoversSampledGaussian) {
  Rng rng(8);
  std::vector<BackscatterExit> exits;
  while (exits.size() < 1000000) {
    double a, b;
    rng.normal_pair(a, b);
    for (double g : {a, b}) {
      const double theta = 43.0 + 17.0 * g;
      if (theta >= 0.0 && theta <= 90.0) exits.push_back({theta, 1.0, 0.0});
    }
  }
  const auto fit = fit_angular(exits, 45);
  EXPECT_NEAR(fit.mu_deg, 43.0, 0.5);
  EXPECT_NEAR(fit.sigma_deg, 17.0, 0.5);
}

TEST(AngularFit, RequiresExits) {
  EXPECT_THROW(fit_angular(std::vector<BackscatterExit>{}), ValidationError);
}

TEST(Kernel, SymmetricAndTruncated) {
  const auto psf = test::synthetic_table(1e-4, 0.77);
  const auto k = build_kernel(psf, 10.0, 500.0);
  EXPECT_EQ(k.radius_cells(), 50);
  EXPECT_EQ(k.size(), 101);
  for (int dx = -50; dx <= 50; ++dx) {
    for (int dy = -50; dy <= 50; ++dy) {
      for (auto c : {Channel::incident, Channel::backscattered}) {
        ASSERT_EQ(k.at(c, dx, dy), k.at(c, -dx, -dy));
        ASSERT_EQ(k.at(c, dx, dy), k.at(c, dy, dx));
        ASSERT_GE(k.at(c, dx, dy), 0.0);
      }
      if (std::hypot(std::abs(dx) - 0.5, std::abs(dy) - 0.5) * 10.0 > 500.0) {
        ASSERT_EQ(k.at(Channel::backscattered, dx, dy), 0.0);
      }
    }
  }
}

TEST(Kernel, ConservesTableIntegralWithinSupport) {
  const auto psf = test::synthetic_table(1e-4, 0.77);
  for (double hw : {300.0, 1000.0, 4000.0}) {
    const auto k = build_kernel(psf, 10.0, hw);
    const double norm = psf.dose_normalization();
    for (auto c : {Channel::incident, Channel::backscattered}) {
      const double table = psf.integral_within(c, hw) / norm;
      EXPECT_NEAR(k.integral(c) / table, 1.0, 5e-3) << "half-width " << hw;
    }
    const double all = psf.integral(Channel::backscattered) + psf.overflow(Channel::backscattered);
    EXPECT_NEAR(k.discarded_backscattered, 1.0 - psf.integral_within(Channel::backscattered, hw) / all, 1e-12);
  }
}

TEST(Kernel, FullFieldSupport) {
  const auto k = build_kernel(test::synthetic_table(1e-4, 0.77), 10.0, 4000.0);
  EXPECT_EQ(k.size(), 801);
  EXPECT_DOUBLE_EQ(k.half_width(), 4000.0);
}

TEST(Kernel, AnalyticSampleMatchesClosedForm) {
  const auto p = test::analytic_psf();
  const auto k = build_kernel(p, 10.0, 500.0);
  const double closed = (p.incident_density(100.0) + p.backscattered_density(100.0)) * 100.0;
  EXPECT_NEAR(k.total(10, 0) / closed, 1.0, 1e-3);
  EXPECT_EQ(k.provenance(), KernelProvenance::analytic);
}

TEST(Kernel, RejectsBadSupport) {
  const auto psf = test::synthetic_table(1e-4, 0.77);
  EXPECT_THROW(build_kernel(psf, 0.0, 100.0), ValidationError);
  EXPECT_THROW(build_kernel(psf, 10.0, 5.0), ValidationError);
  EXPECT_THROW(build_kernel(psf, 0.5, 0.75), ValidationError);  // inside the first radial bin
}

TEST(PsfIo, CsvRoundTripIsExact) {
  const auto psf = test::synthetic_table(1.13e-4, 0.77, 64);
  std::stringstream ss;
  write_psf_csv(ss, psf, {"tool = test"});
  const auto text = ss.str();
  const auto back = read_psf_csv(ss);
  EXPECT_EQ(back.incident, psf.incident);
  EXPECT_EQ(back.backscattered, psf.backscattered);
  EXPECT_EQ(back.edges, psf.edges);
  EXPECT_EQ(back.source, "synthetic");
  std::ostringstream again;
  write_psf_csv(again, back, {"tool = test"});
  EXPECT_EQ(again.str(), text);
}

TEST(PsfIo, MalformedRowReportsLine) {
  std::istringstream is("#! bins = 8\nbin_center_nm,incident_density,backscattered_density\n1,2,x\n");
  try {
    read_psf_csv(is);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

}  // namespace
}  // namespace ebl
