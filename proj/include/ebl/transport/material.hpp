#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "ebl/common/error.hpp"

namespace ebl {

struct Element {
  int z = 0;
  double atomic_weight = 0.0;  // g/mol
  double mass_fraction = 0.0;
};

// Empirical mean ionization potential of a single element in eV:
// 11.5 Z below aluminium, Berger-Seltzer fit above.
inline double element_ionization_ev(int z) {
  if (z < 13) return 11.5 * z;
  return 9.76 * z + 58.5 * std::pow(static_cast<double>(z), -0.19);
}

struct ElementInfo {
  int z;
  double atomic_weight;
};

inline const std::map<std::string, ElementInfo, std::less<>>& element_table() {
  static const std::map<std::string, ElementInfo, std::less<>> table = {
      {"H", {1, 1.008}},    {"He", {2, 4.0026}},  {"Li", {3, 6.94}},    {"Be", {4, 9.0122}},
      {"B", {5, 10.81}},    {"C", {6, 12.011}},   {"N", {7, 14.007}},   {"O", {8, 15.999}},
      {"F", {9, 18.998}},   {"Na", {11, 22.990}}, {"Mg", {12, 24.305}}, {"Al", {13, 26.982}},
      {"Si", {14, 28.085}}, {"P", {15, 30.974}},  {"S", {16, 32.06}},   {"Cl", {17, 35.45}},
      {"Ti", {22, 47.867}}, {"Cr", {24, 51.996}}, {"Fe", {26, 55.845}}, {"Ni", {28, 58.693}},
      {"Cu", {29, 63.546}}, {"Ga", {31, 69.723}}, {"Ge", {32, 72.630}}, {"As", {33, 74.922}},
      {"Nb", {41, 92.906}}, {"Mo", {42, 95.95}},  {"Ag", {47, 107.87}}, {"Ta", {73, 180.95}},
      {"W", {74, 183.84}},  {"Pt", {78, 195.08}}, {"Au", {79, 196.97}},
  };
  return table;
}

class Material {
 public:
  Material() = default;

  Material(std::string name, double density, std::vector<Element> composition)
      : name_(std::move(name)), density_(density), composition_(std::move(composition)) {
    require(density_ > 0.0 && std::isfinite(density_), "material.density",
            "must be positive (material '" + name_ + "')");
    require(!composition_.empty(), "material.composition",
            "at least one element required (material '" + name_ + "')");
    double fraction_sum = 0.0;
    for (const auto& e : composition_) {
      require(e.z >= 1, "material.composition.z", "atomic number must be >= 1");
      require(e.atomic_weight > 0.0, "material.composition.a", "atomic weight must be positive");
      require(e.mass_fraction > 0.0, "material.composition.mass_fraction",
              "mass fractions must be positive");
      fraction_sum += e.mass_fraction;
    }
    require(std::abs(fraction_sum - 1.0) <= 1e-9, "material.composition.mass_fraction",
            "mass fractions must sum to 1 (got " + std::to_string(fraction_sum) + ")");

    // Bragg additivity, weighted by electron density contribution.
    double ln_j = 0.0;
    double z2_over_a = 0.0;
    electrons_per_gram_ = 0.0;
    for (const auto& e : composition_) {
      const double weight = e.mass_fraction * e.z / e.atomic_weight;
      electrons_per_gram_ += weight;
      ln_j += weight * std::log(element_ionization_ev(e.z));
      z2_over_a += weight * e.z;
    }
    mean_ionization_ev_ = std::exp(ln_j / electrons_per_gram_);
    effective_z_ = z2_over_a / electrons_per_gram_;
  }

  // Stoichiometric formula such as "C5H8O2" or "Si".
  static Material from_formula(std::string name, double density, std::string_view formula) {
    std::vector<std::pair<ElementInfo, double>> counts;
    std::size_t i = 0;
    while (i < formula.size()) {
      if (!std::isupper(static_cast<unsigned char>(formula[i])))
        throw ValidationError("material.formula", "unexpected character in '" +
                                                      std::string(formula) + "'");
      std::size_t j = i + 1;
      while (j < formula.size() && std::islower(static_cast<unsigned char>(formula[j]))) ++j;
      const auto symbol = formula.substr(i, j - i);
      const auto it = element_table().find(symbol);
      if (it == element_table().end())
        throw ValidationError("material.formula", "unknown element '" + std::string(symbol) + "'");
      std::size_t k = j;
      while (k < formula.size() && std::isdigit(static_cast<unsigned char>(formula[k]))) ++k;
      const double count = k > j ? std::stod(std::string(formula.substr(j, k - j))) : 1.0;
      counts.emplace_back(it->second, count);
      i = k;
    }
    require(!counts.empty(), "material.formula", "empty formula");
    double total_mass = 0.0;
    for (const auto& [info, n] : counts) total_mass += info.atomic_weight * n;
    std::vector<Element> elements;
    for (const auto& [info, n] : counts)
      elements.push_back({info.z, info.atomic_weight, info.atomic_weight * n / total_mass});
    // Remove rounding drift so the sum-to-one invariant holds tightly.
    double sum = 0.0;
    for (const auto& e : elements) sum += e.mass_fraction;
    for (auto& e : elements) e.mass_fraction /= sum;
    return Material(std::move(name), density, std::move(elements));
  }

  const std::string& name() const noexcept { return name_; }
  double density() const noexcept { return density_; }
  const std::vector<Element>& composition() const noexcept { return composition_; }
  double mean_ionization_ev() const noexcept { return mean_ionization_ev_; }
  double effective_z() const noexcept { return effective_z_; }
  // sum_i w_i Z_i / A_i  (mol electrons per gram)
  double electrons_per_gram() const noexcept { return electrons_per_gram_; }

 private:
  std::string name_;
  double density_ = 0.0;
  std::vector<Element> composition_;
  double mean_ionization_ev_ = 0.0;
  double effective_z_ = 0.0;
  double electrons_per_gram_ = 0.0;
};

namespace materials {

inline Material pmma() { return Material::from_formula("PMMA", 1.14, "C5H8O2"); }
inline Material mma() { return Material::from_formula("MMA", 0.80, "C5H8O2"); }
inline Material silicon() { return Material("Si", 2.33, {{14, 28.085, 1.0}}); }
inline Material germanium() { return Material("Ge", 5.323, {{32, 72.630, 1.0}}); }
inline Material gold() { return Material("Au", 19.32, {{79, 196.97, 1.0}}); }

// Returns true and fills `out` when `name` is one of the built-in materials.
inline bool builtin(std::string_view name, Material& out) {
  if (name == "PMMA") out = pmma();
  else if (name == "MMA") out = mma();
  else if (name == "Si") out = silicon();
  else if (name == "Ge") out = germanium();
  else if (name == "Au") out = gold();
  else return false;
  return true;
}

}  // namespace materials
}  // namespace ebl
