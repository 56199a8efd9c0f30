#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/transport/simulate.hpp"

namespace ebl {

// Bin 0 is the core disk [0, first_edge); bins 1..count-1 are log-spaced
// annuli from first_edge to last_edge.
struct RadialBinning {
  std::size_t count = 128;
  double first_edge_nm = 1.0;
  double last_edge_nm = 50000.0;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  void validate() const {
    require(count >= 8, "psf.bins", "at least 8 bins required");
    require(first_edge_nm > 0.0 && last_edge_nm > first_edge_nm, "psf.edges",
            "edges must be positive and increasing");
  }

  std::vector<double> edges() const {
    std::vector<double> e(count + 1);
    e[0] = 0.0;
    const double span = std::log(last_edge_nm / first_edge_nm);
    for (std::size_t k = 1; k <= count; ++k)
      e[k] = first_edge_nm * std::exp(span * static_cast<double>(k - 1) /
                                       static_cast<double>(count - 1));
    e[count] = last_edge_nm;
    return e;
  }

  // Bin containing radius r given precomputed edges, or npos beyond the last edge.
  std::size_t bin_of(double r, std::span<const double> e) const {
    if (r < first_edge_nm) return 0;
    if (r >= last_edge_nm) return npos;
    const double span = std::log(last_edge_nm / first_edge_nm);
    auto k = static_cast<std::size_t>(
        1.0 + std::floor(std::log(r / first_edge_nm) / span * static_cast<double>(count - 1)));
    k = std::clamp<std::size_t>(k, 1, count - 1);
    while (k > 1 && r < e[k]) --k;
    while (k + 1 < count && r >= e[k + 1]) ++k;
    return k;
  }
};

// Radial deposited-energy density, z-integrated over one depth region.
struct RadialPSF {
  std::vector<double> edges;          // nm, size bins+1
  std::vector<double> incident;       // eV / nm^2 / trajectory
  std::vector<double> backscattered;  // eV / nm^2 / trajectory
  RadialBinning binning;
  std::uint64_t trajectories = 0;
  double overflow_incident_ev = 0.0;  // per trajectory, beyond the last edge
  double overflow_backscattered_ev = 0.0;
  double reference_energy_ev = 0.0;  // per trajectory, whole resist incl. overflow
  double depth_extent_nm = 0.0;      // thickness of the region this table covers
  double resist_thickness_nm = 0.0;
  std::string source;

  std::size_t bins() const noexcept { return incident.size(); }

  double bin_center(std::size_t k) const {
    return k == 0 ? 0.5 * edges[1] : std::sqrt(edges[k] * edges[k + 1]);
  }

  double annulus_area(std::size_t k) const {
    return std::numbers::pi * (edges[k + 1] * edges[k + 1] - edges[k] * edges[k]);
  }

  const std::vector<double>& channel(Channel c) const {
    return c == Channel::incident ? incident : backscattered;
  }

  double overflow(Channel c) const {
    return c == Channel::incident ? overflow_incident_ev : overflow_backscattered_ev;
  }

  double total_density(std::size_t k) const { return incident[k] + backscattered[k]; }

  // Energy per trajectory held by the table for one channel.
  double integral(Channel c) const {
    const auto& d = channel(c);
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) s += d[k] * annulus_area(k);
    return s;
  }

  // Same integral, restricted to r <= radius (partial annulus by area).
  double integral_within(Channel c, double radius) const {
    const auto& d = channel(c);
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (edges[k] >= radius) break;
      const double outer = std::min(edges[k + 1], radius);
      s += d[k] * std::numbers::pi * (outer * outer - edges[k] * edges[k]);
    }
    return s;
  }

  // Piecewise-constant density lookup; zero beyond the table.
  double density(Channel c, double r) const {
    const std::size_t k = binning.bin_of(r, edges);
    return k == RadialBinning::npos ? 0.0 : channel(c)[k];
  }

  // Divisor turning eV/nm^2 per trajectory into dose-equivalent weights: a
  // uniform exposure D yields the region's mean volumetric dose relative to
  // the whole resist.
  double dose_normalization() const {
    if (resist_thickness_nm <= 0.0 || depth_extent_nm <= 0.0) return reference_energy_ev;
    return reference_energy_ev * depth_extent_nm / resist_thickness_nm;
  }
};

// Exact (integer fixed-point) energy accumulation by depth region, channel
// and radial bin. Sums are associative, so any merge order gives the same table.
class RadialAccumulator {
 public:
  static constexpr double kUnitsPerEv = 1048576.0;  // 2^20
  static constexpr int kAllResist = -1;

  RadialAccumulator() = default;
  RadialAccumulator(RadialBinning binning, std::vector<double> layer_boundaries_nm)
      : binning_(binning), boundaries_(std::move(layer_boundaries_nm)) {
    binning_.validate();
    require(boundaries_.size() >= 1, "psf.layer_boundaries", "need at least the surface");
    edges_ = binning_.edges();
    regions_ = boundaries_.size();  // slot 0: whole resist, 1..L: layers
    sums_.assign(regions_ * 2 * binning_.count, 0);
    overflow_.assign(regions_ * 2, 0);
  }

  const RadialBinning& binning() const noexcept { return binning_; }
  std::size_t layer_count() const noexcept { return regions_ - 1; }

  // Layer index of a depth, or -1 outside the resist.
  int layer_of(double z) const {
    if (z < boundaries_.front() || z >= boundaries_.back()) return -1;
    for (std::size_t i = 0; i + 1 < boundaries_.size(); ++i)
      if (z < boundaries_[i + 1]) return static_cast<int>(i);
    return -1;
  }

  void add(const DepositionEvent& ev) {
    const int layer = layer_of(ev.z);
    if (layer < 0) return;
    const auto units = static_cast<std::int64_t>(std::llround(ev.energy_ev * kUnitsPerEv));
    const std::size_t ch = ev.channel == Channel::incident ? 0 : 1;
    const double r = std::hypot(static_cast<double>(ev.x), static_cast<double>(ev.y));
    const std::size_t bin = binning_.bin_of(r, edges_);
    for (std::size_t slot : {std::size_t{0}, static_cast<std::size_t>(layer) + 1}) {
      if (bin == RadialBinning::npos) overflow_[slot * 2 + ch] += units;
      else sums_[(slot * 2 + ch) * binning_.count + bin] += units;
    }
  }

  void merge(const RadialAccumulator& other) {
    if (sums_.empty()) {
      *this = other;
      return;
    }
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
    for (std::size_t i = 0; i < overflow_.size(); ++i) overflow_[i] += other.overflow_[i];
  }

  // Raw fixed-point sum for a region (kAllResist or layer index), channel and bin.
  std::int64_t units(int region, Channel c, std::size_t bin) const {
    return sums_[(slot(region) * 2 + (c == Channel::incident ? 0 : 1)) * binning_.count + bin];
  }

  std::int64_t overflow_units(int region, Channel c) const {
    return overflow_[slot(region) * 2 + (c == Channel::incident ? 0 : 1)];
  }

  RadialPSF to_psf(int region, std::uint64_t trajectories, std::string source = {}) const {
    require(trajectories >= 1, "psf.trajectories", "must be at least 1");
    RadialPSF psf;
    psf.edges = edges_;
    psf.binning = binning_;
    psf.trajectories = trajectories;
    psf.source = std::move(source);
    psf.resist_thickness_nm = boundaries_.back() - boundaries_.front();
    psf.depth_extent_nm =
        region == kAllResist
            ? psf.resist_thickness_nm
            : boundaries_[static_cast<std::size_t>(region) + 1] -
                  boundaries_[static_cast<std::size_t>(region)];
    const double n = static_cast<double>(trajectories);
    psf.incident.resize(binning_.count);
    psf.backscattered.resize(binning_.count);
    for (std::size_t k = 0; k < binning_.count; ++k) {
      const double area = psf.annulus_area(k);
      psf.incident[k] = to_ev(units(region, Channel::incident, k)) / (area * n);
      psf.backscattered[k] = to_ev(units(region, Channel::backscattered, k)) / (area * n);
    }
    psf.overflow_incident_ev = to_ev(overflow_units(region, Channel::incident)) / n;
    psf.overflow_backscattered_ev = to_ev(overflow_units(region, Channel::backscattered)) / n;
    std::int64_t all = 0;
    for (std::size_t k = 0; k < binning_.count; ++k)
      all += units(kAllResist, Channel::incident, k) + units(kAllResist, Channel::backscattered, k);
    all += overflow_units(kAllResist, Channel::incident) +
           overflow_units(kAllResist, Channel::backscattered);
    psf.reference_energy_ev = to_ev(all) / n;
    return psf;
  }

  static double to_ev(std::int64_t units) { return static_cast<double>(units) / kUnitsPerEv; }

 private:
  std::size_t slot(int region) const {
    const auto s = static_cast<std::size_t>(region + 1);
    require(s < regions_, "psf.region", "layer index out of range");
    return s;
  }

  RadialBinning binning_;
  std::vector<double> boundaries_;
  std::vector<double> edges_;
  std::size_t regions_ = 0;
  std::vector<std::int64_t> sums_;
  std::vector<std::int64_t> overflow_;
};

// Streaming tally for transport(): bins events as they are produced so large
// runs never materialise the event list.
class RadialTally {
 public:
  RadialTally(RadialBinning binning, std::vector<double> layer_boundaries_nm)
      : acc_(binning, std::move(layer_boundaries_nm)) {}

  void deposit(const DepositionEvent& ev, int) { acc_.add(ev); }
  void exit(const BackscatterExit& ex) { exits_.push_back(ex); }
  void merge(RadialTally&& other) {
    acc_.merge(other.acc_);
    exits_.insert(exits_.end(), other.exits_.begin(), other.exits_.end());
  }

  const RadialAccumulator& accumulator() const noexcept { return acc_; }
  const std::vector<BackscatterExit>& exits() const noexcept { return exits_; }

 private:
  RadialAccumulator acc_;
  std::vector<BackscatterExit> exits_;
};

inline RadialAccumulator accumulate(const DepositionRecord& record, const RadialBinning& binning) {
  require(!record.events.empty(), "record.events", "deposition record is empty");
  require(!record.layer_boundaries_nm.empty(), "record.layer_boundaries",
          "record carries no stack geometry");
  RadialAccumulator acc(binning, record.layer_boundaries_nm);
  for (const auto& ev : record.events) acc.add(ev);
  return acc;
}

// Whole-resist radial PSF from a recorded run.
inline RadialPSF build_radial_psf(const DepositionRecord& record, std::size_t bins = 128) {
  RadialBinning binning;
  binning.count = bins;
  return accumulate(record, binning)
      .to_psf(RadialAccumulator::kAllResist, record.summary.trajectories);
}

// Single-layer radial PSF (0 = top layer).
inline RadialPSF build_layer_psf(const DepositionRecord& record, int layer,
                                 std::size_t bins = 128) {
  RadialBinning binning;
  binning.count = bins;
  return accumulate(record, binning).to_psf(layer, record.summary.trajectories);
}

}  // namespace ebl
