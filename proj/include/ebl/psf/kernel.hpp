#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/psf/fit.hpp"
#include "ebl/psf/radial_psf.hpp"

namespace ebl {

enum class KernelProvenance : std::uint8_t { table = 0, analytic = 1, custom = 2 };

// Square convolution kernel of (2n+1)^2 cells centred on cell (n, n). Each
// cell holds the dose delivered to the centre cell per unit applied dose in
// that cell (dimensionless), kept per channel.
class PsfKernel {
 public:
  PsfKernel() = default;

  PsfKernel(double pitch_nm, int radius_cells, std::vector<double> incident,
            std::vector<double> backscattered, KernelProvenance provenance)
      : pitch_(pitch_nm),
        radius_(radius_cells),
        incident_(std::move(incident)),
        backscattered_(std::move(backscattered)),
        provenance_(provenance) {
    require(pitch_ > 0.0, "kernel.pitch", "must be positive");
    require(radius_ >= 0, "kernel.radius", "must be non-negative");
    const auto n = static_cast<std::size_t>(size()) * static_cast<std::size_t>(size());
    require(incident_.size() == n && backscattered_.size() == n, "kernel.samples",
            "sample grid does not match the kernel size");
  }

  // Unit weight at the centre cell of the incident channel.
  static PsfKernel delta(double pitch_nm) {
    return PsfKernel(pitch_nm, 0, {1.0}, {0.0}, KernelProvenance::custom);
  }

  double pitch() const noexcept { return pitch_; }
  int radius_cells() const noexcept { return radius_; }
  double half_width() const noexcept { return radius_ * pitch_; }
  int size() const noexcept { return 2 * radius_ + 1; }
  KernelProvenance provenance() const noexcept { return provenance_; }

  const std::vector<double>& samples(Channel c) const {
    return c == Channel::incident ? incident_ : backscattered_;
  }

  // Offsets in cells from the centre, each in [-n, n].
  double at(Channel c, int dx, int dy) const {
    return samples(c)[index(dx, dy)];
  }
  double total(int dx, int dy) const { return incident_[index(dx, dy)] + backscattered_[index(dx, dy)]; }

  double integral(Channel c) const {
    double s = 0.0;
    for (double v : samples(c)) s += v;
    return s;
  }
  double integral() const { return integral(Channel::incident) + integral(Channel::backscattered); }

  // Fraction of each channel's energy lying beyond the truncation radius.
  double discarded_incident = 0.0;
  double discarded_backscattered = 0.0;

  // Single-channel copies for channel-decomposition checks.
  PsfKernel only(Channel c) const {
    std::vector<double> zero(incident_.size(), 0.0);
    PsfKernel k = c == Channel::incident
                      ? PsfKernel(pitch_, radius_, incident_, zero, provenance_)
                      : PsfKernel(pitch_, radius_, zero, backscattered_, provenance_);
    return k;
  }

 private:
  std::size_t index(int dx, int dy) const {
    return static_cast<std::size_t>(dy + radius_) * static_cast<std::size_t>(size()) +
           static_cast<std::size_t>(dx + radius_);
  }

  double pitch_ = 0.0;
  int radius_ = 0;
  std::vector<double> incident_;
  std::vector<double> backscattered_;
  KernelProvenance provenance_ = KernelProvenance::custom;
};

namespace detail {

// Fills one octant (0 <= dy <= dx) by averaging `density` over s x s
// sub-points of each cell, then mirrors it so the kernel is exactly
// symmetric under x <-> -x, y <-> -y and x <-> y.
template <class Density, class Subsamples>
std::vector<double> sample_octant_mirrored(int n, double pitch, double half_width,
                                           Density&& density, Subsamples&& subsamples) {
  const int size = 2 * n + 1;
  std::vector<double> out(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0);
  const double cell_area = pitch * pitch;
  for (int dx = 0; dx <= n; ++dx) {
    for (int dy = 0; dy <= dx; ++dy) {
      const double rc = std::hypot(dx * pitch, dy * pitch);
      if (rc > half_width + pitch) continue;
      const int s = subsamples(rc);
      double acc = 0.0;
      for (int i = 0; i < s; ++i) {
        const double ox = (dx + (i + 0.5) / s - 0.5) * pitch;
        for (int j = 0; j < s; ++j) {
          const double oy = (dy + (j + 0.5) / s - 0.5) * pitch;
          const double r = std::hypot(ox, oy);
          if (r <= half_width) acc += density(r);
        }
      }
      const double value = acc / (s * s) * cell_area;
      for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
          const int a = sx * dx, b = sy * dy;
          out[static_cast<std::size_t>(b + n) * size + static_cast<std::size_t>(a + n)] = value;
          out[static_cast<std::size_t>(a + n) * size + static_cast<std::size_t>(b + n)] = value;
        }
      }
    }
  }
  return out;
}

inline int cells_for(double half_width, double pitch) {
  return static_cast<int>(std::floor(half_width / pitch + 1e-9));
}

}  // namespace detail

// Grids a radial table. Cells are cell-averages of the table's
// piecewise-constant density, truncated to the disk r <= half_width without
// renormalising the discarded tail.
inline PsfKernel build_kernel(const RadialPSF& psf, double pitch_nm, double half_width_nm) {
  require(pitch_nm > 0.0, "kernel.pitch", "must be positive");
  require(half_width_nm >= pitch_nm, "kernel.half_width", "must be at least one pitch");
  require(psf.bins() >= 2, "kernel.psf", "radial table is empty");
  require(half_width_nm >= psf.edges[1], "kernel.half_width",
          "smaller than the first radial bin of the table");
  const double norm = psf.dose_normalization();
  require(norm > 0.0, "kernel.psf", "table carries no deposited energy");

  const int n = detail::cells_for(half_width_nm, pitch_nm);
  // Fine sub-sampling where bins are narrow compared to a cell.
  auto subsamples = [&](double rc) {
    if (rc < 4.0 * pitch_nm) return 32;
    if (rc < 30.0 * pitch_nm) return 8;
    return 2;
  };
  auto grid = [&](Channel c) {
    return detail::sample_octant_mirrored(
        n, pitch_nm, half_width_nm, [&](double r) { return psf.density(c, r) / norm; },
        subsamples);
  };
  PsfKernel kernel(pitch_nm, n, grid(Channel::incident), grid(Channel::backscattered),
                   KernelProvenance::table);

  auto discarded = [&](Channel c) {
    const double all = psf.integral(c) + psf.overflow(c);
    if (all <= 0.0) return 0.0;
    return (all - psf.integral_within(c, half_width_nm)) / all;
  };
  kernel.discarded_incident = discarded(Channel::incident);
  kernel.discarded_backscattered = discarded(Channel::backscattered);
  return kernel;
}

// Two-component analytic point spread function: a Gaussian forward term for
// the incident channel and a power law for the backscattered channel. Both
// are area densities per unit applied dose (1/nm^2).
struct AnalyticPsf {
  double forward_sigma_nm = 20.0;
  double forward_weight = 1.0;  // integral of the forward term
  PowerLawFit backscatter;      // uses a and b only
  double core_radius_nm = 1.0;  // power law held flat inside this radius

  double incident_density(double r) const {
    const double s2 = forward_sigma_nm * forward_sigma_nm;
    return forward_weight * std::exp(-0.5 * r * r / s2) / (2.0 * std::numbers::pi * s2);
  }
  double backscattered_density(double r) const {
    return backscatter.a * std::pow(std::max(r, core_radius_nm), -backscatter.b);
  }
};

// Point-samples the analytic densities at cell centres, sub-sampling only the
// few cells nearest the origin.
inline PsfKernel build_kernel(const AnalyticPsf& psf, double pitch_nm, double half_width_nm) {
  require(pitch_nm > 0.0, "kernel.pitch", "must be positive");
  require(half_width_nm >= pitch_nm, "kernel.half_width", "must be at least one pitch");
  require(psf.forward_sigma_nm > 0.0, "kernel.forward_sigma", "must be positive");
  const int n = detail::cells_for(half_width_nm, pitch_nm);
  auto subsamples = [&](double rc) { return rc < 3.0 * pitch_nm ? 16 : 1; };
  auto inc = detail::sample_octant_mirrored(
      n, pitch_nm, half_width_nm, [&](double r) { return psf.incident_density(r); }, subsamples);
  auto bs = detail::sample_octant_mirrored(
      n, pitch_nm, half_width_nm, [&](double r) { return psf.backscattered_density(r); },
      subsamples);
  return PsfKernel(pitch_nm, n, std::move(inc), std::move(bs), KernelProvenance::analytic);
}

}  // namespace ebl
