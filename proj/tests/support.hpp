#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ebl/common/grid.hpp"
#include "ebl/common/rng.hpp"
#include "ebl/psf/kernel.hpp"
#include "ebl/psf/radial_psf.hpp"

namespace ebl::test {

// Short-range Gaussian forward term plus a power-law backscatter tail; cheap
// to build and close in shape to a simulated kernel.
inline AnalyticPsf analytic_psf(double backscatter_a = 2e-6, double b = 0.77) {
  AnalyticPsf p;
  p.forward_sigma_nm = 15.0;
  p.forward_weight = 0.6;
  p.backscatter.a = backscatter_a;
  p.backscatter.b = b;
  p.core_radius_nm = 5.0;
  return p;
}

inline PsfKernel small_kernel(double pitch = 10.0, double half_width = 320.0) {
  return build_kernel(analytic_psf(), pitch, half_width);
}

// Radial table following E(r) = a r^-b in the backscattered channel and a
// narrow Gaussian in the incident one.
inline RadialPSF synthetic_table(double a, double b, std::size_t bins = 128) {
  RadialPSF psf;
  psf.binning.count = bins;
  psf.edges = psf.binning.edges();
  for (std::size_t k = 0; k < bins; ++k) {
    const double r = psf.bin_center(k);
    psf.incident.push_back(1e-2 * std::exp(-0.5 * r * r / 400.0));
    psf.backscattered.push_back(a * std::pow(r, -b));
  }
  psf.trajectories = 1000;
  psf.reference_energy_ev = 1.0;
  psf.depth_extent_nm = 730.0;
  psf.resist_thickness_nm = 730.0;
  psf.source = "synthetic";
  return psf;
}

inline Grid2D random_exposure(std::size_t w, std::size_t h, double pitch, std::uint64_t seed) {
  Grid2D g(w, h, pitch);
  Rng rng(seed);
  for (auto& v : g.values) v = rng.uniform() < 0.3 ? 0.0 : 100.0 * rng.uniform();
  return g;
}

inline double max_relative_difference(const Grid2D& a, const Grid2D& b) {
  const double scale = std::max(a.max(), 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / scale);
  return worst;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "ebl_";
    if (info) name += std::string(info->test_suite_name()) + "_" + info->name();
    create(name);
  }
  explicit TempDir(const std::string& name) { create("ebl_" + name); }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  void create(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }

  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace ebl::test
