#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/transport/material.hpp"

namespace ebl {

struct Layer {
  Material material;
  double thickness_nm = 0.0;
};

// Ordered resist layers (top first) on a semi-infinite substrate.
// z grows downward from the top surface at z = 0.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(std::vector<Layer> layers, Material substrate)
      : layers_(std::move(layers)), substrate_(std::move(substrate)) {
    validate();
  }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Material& substrate() const noexcept { return substrate_; }

  double total_thickness_nm() const noexcept {
    double t = 0.0;
    for (const auto& l : layers_) t += l.thickness_nm;
    return t;
  }

  // z coordinates of layer interfaces: 0, t0, t0+t1, ..., total.
  std::vector<double> boundaries_nm() const {
    std::vector<double> z{0.0};
    for (const auto& l : layers_) z.push_back(z.back() + l.thickness_nm);
    return z;
  }

  void validate() const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      require(layers_[i].thickness_nm > 0.0, "stack.layers.thickness",
              "layer " + std::to_string(i) + " thickness must be positive");
    }
    require(substrate_.density() > 0.0, "stack.substrate", "substrate material is not set");
  }

 private:
  std::vector<Layer> layers_;
  Material substrate_;
};

struct BeamConfig {
  double energy_kev = 30.0;
  double radius_nm = 10.0;  // Gaussian standard deviation
  std::uint64_t trajectories = 10000;
  double cutoff_ev = 50.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(energy_kev > 0.0, "beam.energy_kev", "must be positive");
    require(cutoff_ev >= 0.0, "beam.cutoff_ev", "must be non-negative");
    // A cutoff at or above the beam energy is accepted: every trajectory
    // terminates at birth and its energy is booked as residual.
    require(radius_nm >= 0.0, "beam.radius_nm", "must be non-negative");
    require(trajectories >= 1, "beam.trajectories", "must be at least 1");
  }
};

namespace stacks {

// 230 nm PMMA over 500 nm MMA copolymer on silicon.
inline LayerStack pmma_mma_si() {
  return LayerStack({{materials::pmma(), 230.0}, {materials::mma(), 500.0}},
                    materials::silicon());
}

inline LayerStack bare(Material substrate) { return LayerStack({}, std::move(substrate)); }

}  // namespace stacks
}  // namespace ebl
