#pragma once

// Single-scattering electron transport physics: screened-Rutherford elastic
// scattering (Joy's parameterisation) and a Bethe stopping power with the
// Joy-Luo low-energy correction.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ebl/common/rng.hpp"
#include "ebl/transport/material.hpp"

namespace ebl {

inline constexpr double kAvogadro = 6.02214076e23;
inline constexpr double kElectronRestKeV = 511.0;

// Screening parameter alpha (dimensionless), E in keV.
inline double screening_parameter(int z, double energy_kev) {
  return 3.4e-3 * std::pow(static_cast<double>(z), 0.67) / energy_kev;
}

// Total screened-Rutherford cross-section in cm^2 per atom, with the
// relativistic correction factor.
inline double rutherford_cross_section_cm2(int z, double energy_kev, double alpha) {
  const double rel = (energy_kev + kElectronRestKeV) / (energy_kev + 2.0 * kElectronRestKeV);
  return 5.21e-21 * (static_cast<double>(z) * z) / (energy_kev * energy_kev) *
         (4.0 * std::numbers::pi / (alpha * (1.0 + alpha))) * rel * rel;
}

inline double rutherford_cross_section_cm2(int z, double energy_kev) {
  return rutherford_cross_section_cm2(z, energy_kev, screening_parameter(z, energy_kev));
}

// Elastic mean free path in nm for a pure element.
inline double elastic_mean_free_path_nm(int z, double atomic_weight, double density,
                                        double energy_kev) {
  const double atoms_per_cm3 = kAvogadro * density / atomic_weight;
  return 1e7 / (atoms_per_cm3 * rutherford_cross_section_cm2(z, energy_kev));
}

// Inverts the screened-Rutherford angular CDF for a uniform deviate u in [0,1).
inline double sample_polar_cosine(double alpha, double u) {
  const double cos_theta = 1.0 - 2.0 * alpha * u / (1.0 + alpha - u);
  return std::clamp(cos_theta, -1.0, 1.0);
}

struct ElasticEvent {
  double free_path_nm = 0.0;
  double polar = 0.0;    // radians
  double azimuth = 0.0;  // radians, [0, 2pi)
};

inline ElasticEvent sample_elastic_event(int z, double atomic_weight, double density,
                                         double energy_kev, Rng& rng) {
  const double alpha = screening_parameter(z, energy_kev);
  const double lambda = elastic_mean_free_path_nm(z, atomic_weight, density, energy_kev);
  ElasticEvent ev;
  ev.free_path_nm = -lambda * std::log(rng.uniform_positive());
  ev.polar = std::acos(sample_polar_cosine(alpha, rng.uniform()));
  ev.azimuth = 2.0 * std::numbers::pi * rng.uniform();
  return ev;
}

// Joy-Luo k coefficient.
inline double joy_luo_k(double z) { return 0.734 * std::pow(z, 0.037); }

// Modified Bethe stopping power in eV/nm (positive).
//   dE/ds [keV/cm] = 78500 rho (sum w Z/A) / E * ln(1.166 (E + k J) / J)
inline double stopping_power_ev_per_nm(const Material& material, double energy_kev) {
  const double j_kev = material.mean_ionization_ev() * 1e-3;
  const double k = joy_luo_k(material.effective_z());
  const double log_term = std::log(1.166 * (energy_kev + k * j_kev) / j_kev);
  const double kev_per_cm =
      78500.0 * material.density() * material.electrons_per_gram() / energy_kev * log_term;
  // Guard the far low-energy end where the fit's logarithm turns negative.
  return std::max(kev_per_cm * 1e-4, 1e-6);
}

// Energy (eV) deposited along a straight step; never exceeds the electron's energy.
inline double continuous_energy_loss(const Material& material, double energy_kev,
                                     double path_nm) {
  if (path_nm <= 0.0) return 0.0;
  const double loss = stopping_power_ev_per_nm(material, energy_kev) * path_nm;
  return std::min(loss, energy_kev * 1e3);
}

// Precomputed per-material scattering data used inside the transport loop.
class ScatteringTable {
 public:
  ScatteringTable() = default;

  explicit ScatteringTable(const Material& material) : material_(&material) {
    for (const auto& e : material.composition()) {
      entries_.push_back({e.z, 3.4e-3 * std::pow(static_cast<double>(e.z), 0.67),
                          kAvogadro * material.density() * e.mass_fraction / e.atomic_weight});
    }
    scratch_.resize(entries_.size());
  }

  const Material& material() const noexcept { return *material_; }

  // Macroscopic elastic mean free path in nm.
  double mean_free_path_nm(double energy_kev) const {
    double sigma_total = 0.0;
    for (const auto& e : entries_) {
      sigma_total +=
          e.number_density * rutherford_cross_section_cm2(e.z, energy_kev, e.alpha_coeff / energy_kev);
    }
    return 1e7 / sigma_total;
  }

  // Samples a free path, the scattering element and the polar cosine in one go.
  struct Sample {
    double free_path_nm;
    double cos_theta;
  };

  Sample sample(double energy_kev, Rng& rng) {
    double sigma_total = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      sigma_total +=
          e.number_density * rutherford_cross_section_cm2(e.z, energy_kev, e.alpha_coeff / energy_kev);
      scratch_[i] = sigma_total;
    }
    Sample s;
    s.free_path_nm = -1e7 / sigma_total * std::log(rng.uniform_positive());
    std::size_t pick = 0;
    if (entries_.size() > 1) {
      const double target = rng.uniform() * sigma_total;
      while (pick + 1 < entries_.size() && scratch_[pick] <= target) ++pick;
    }
    s.cos_theta = sample_polar_cosine(entries_[pick].alpha_coeff / energy_kev, rng.uniform());
    return s;
  }

 private:
  struct Entry {
    int z;
    double alpha_coeff;     // alpha * E
    double number_density;  // atoms / cm^3
  };

  const Material* material_ = nullptr;
  std::vector<Entry> entries_;
  std::vector<double> scratch_;
};

}  // namespace ebl
