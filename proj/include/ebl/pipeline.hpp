#pragma once

#include <string>
#include <vector>

#include "ebl/dose/convolve.hpp"
#include "ebl/layout/rasterize.hpp"
#include "ebl/psf/kernel.hpp"
#include "ebl/psf/radial_psf.hpp"
#include "ebl/transport/config.hpp"
#include "ebl/window/window.hpp"

namespace ebl {

// Whole-resist and per-layer tables from one transport run.
struct PsfSet {
  RadialPSF all;
  std::vector<RadialPSF> layers;  // top first
  std::vector<BackscatterExit> exits;
  TransportSummary summary;
};

inline PsfSet psf_set_from(const RadialAccumulator& acc, std::uint64_t trajectories,
                           const std::string& source) {
  PsfSet set;
  set.all = acc.to_psf(RadialAccumulator::kAllResist, trajectories, source);
  for (std::size_t l = 0; l < acc.layer_count(); ++l)
    set.layers.push_back(acc.to_psf(static_cast<int>(l), trajectories, source));
  return set;
}

inline PsfSet psf_set_from(const DepositionRecord& record, std::size_t bins = 128,
                           const std::string& source = {}) {
  RadialBinning binning;
  binning.count = bins;
  auto set = psf_set_from(accumulate(record, binning), record.summary.trajectories, source);
  set.exits = record.exits;
  set.summary = record.summary;
  return set;
}

// Transport straight into radial bins, without keeping the event list.
inline PsfSet simulate_psf(const TransportConfig& cfg, std::size_t bins = 128,
                           const std::string& source = {}) {
  RadialBinning binning;
  binning.count = bins;
  auto result = transport(cfg.stack, cfg.beam, cfg.options,
                          RadialTally(binning, cfg.stack.boundaries_nm()));
  auto set = psf_set_from(result.tally.accumulator(), cfg.beam.trajectories, source);
  set.exits = result.tally.exits();
  set.summary = result.summary;
  return set;
}

struct KernelSet {
  PsfKernel total;
  PsfKernel top;     // PMMA
  PsfKernel bottom;  // MMA
};

inline KernelSet build_kernel_set(const RadialPSF& all, const RadialPSF& top,
                                  const RadialPSF& bottom, double pitch_nm, double half_width_nm) {
  return {build_kernel(all, pitch_nm, half_width_nm), build_kernel(top, pitch_nm, half_width_nm),
          build_kernel(bottom, pitch_nm, half_width_nm)};
}

inline KernelSet build_kernel_set(const PsfSet& set, double pitch_nm, double half_width_nm) {
  require(set.layers.size() >= 2, "psf.layers", "need a two-layer resist stack");
  return build_kernel_set(set.all, set.layers.front(), set.layers[1], pitch_nm, half_width_nm);
}

inline DoseGrid convolve(const Grid2D& exposure, const PsfKernel& kernel, bool oracle,
                         unsigned threads = 0) {
  return oracle ? convolve_direct(exposure, kernel, threads) : convolve_fast(exposure, kernel);
}

inline LayerDose layer_dose(const Grid2D& exposure, const KernelSet& k, bool oracle = false,
                            unsigned threads = 0) {
  return {convolve(exposure, k.top, oracle, threads), convolve(exposure, k.bottom, oracle, threads)};
}

}  // namespace ebl
