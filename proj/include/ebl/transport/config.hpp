#pragma once

// Key-value run configuration for transport:
//
//   [material NAME]      density = g/cm^3; formula = C5H8O2 | element = Z A mass_fraction
//   [stack]              layer = MATERIAL THICKNESS_NM (top first, repeatable); substrate = MATERIAL
//   [beam]               energy_kev, radius_nm, trajectories, cutoff_ev, seed
//   [transport]          max_depth_nm, max_deposit_segment_nm, chunk_size, record_substrate_events
//
// Built-in materials (PMMA, MMA, Si, Ge, Au) need no block.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/transport/simulate.hpp"

namespace ebl {

struct TransportConfig {
  LayerStack stack;
  BeamConfig beam;
  TransportOptions options;
};

namespace detail {

struct PendingMaterial {
  double density = 0.0;
  std::string formula;
  std::vector<Element> elements;
  std::size_t line = 0;
};

}  // namespace detail

inline TransportConfig parse_transport_config(std::istream& is,
                                              const std::string& source = "config") {
  TransportConfig cfg;
  std::map<std::string, detail::PendingMaterial> pending;
  std::vector<std::pair<std::string, double>> layer_specs;
  std::string substrate_name;
  std::string section;
  std::string material_name;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const std::size_t col = static_cast<std::size_t>(t.data() - raw.data()) + 1;

    if (t.front() == '[') {
      if (t.back() != ']') throw FormatError(source, lineno, col, "unterminated section header");
      const auto inner = text::tokenize(t.substr(1, t.size() - 2));
      if (inner.empty()) throw FormatError(source, lineno, col, "empty section header");
      section = std::string(inner[0].text);
      if (section == "material") {
        if (inner.size() != 2) throw FormatError(source, lineno, col, "expected [material NAME]");
        material_name = std::string(inner[1].text);
        pending[material_name].line = lineno;
      } else if (section != "stack" && section != "beam" && section != "transport") {
        throw FormatError(source, lineno, col, "unknown section '" + section + "'");
      } else if (inner.size() != 1) {
        throw FormatError(source, lineno, col, "unexpected tokens after section name");
      }
      continue;
    }

    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw FormatError(source, lineno, col, "expected key = value");
    const std::string key(text::trim(t.substr(0, eq)));
    const auto value = text::trim(t.substr(eq + 1));
    const std::size_t vcol = col + static_cast<std::size_t>(value.data() - t.data());
    auto number = [&](std::string_view s, std::size_t c) {
      double v = 0.0;
      if (!text::parse_double(s, v)) throw FormatError(source, lineno, c, "expected a number");
      return v;
    };
    auto integer = [&](std::string_view s, std::size_t c) {
      std::uint64_t v = 0;
      if (!text::parse_int(s, v)) throw FormatError(source, lineno, c, "expected an integer");
      return v;
    };
    auto unknown = [&] { throw FormatError(source, lineno, col, "unknown key '" + key + "' in [" + section + "]"); };

    if (section.empty()) throw FormatError(source, lineno, col, "key outside of a section");
    if (section == "material") {
      auto& m = pending[material_name];
      if (key == "density") m.density = number(value, vcol);
      else if (key == "formula") m.formula = std::string(value);
      else if (key == "element") {
        const auto tok = text::tokenize(value);
        if (tok.size() != 3) throw FormatError(source, lineno, vcol, "expected: element = Z A mass_fraction");
        Element e;
        e.z = static_cast<int>(integer(tok[0].text, vcol + tok[0].column - 1));
        e.atomic_weight = number(tok[1].text, vcol + tok[1].column - 1);
        e.mass_fraction = number(tok[2].text, vcol + tok[2].column - 1);
        m.elements.push_back(e);
      } else unknown();
    } else if (section == "stack") {
      if (key == "layer") {
        const auto tok = text::tokenize(value);
        if (tok.size() != 2) throw FormatError(source, lineno, vcol, "expected: layer = MATERIAL THICKNESS_NM");
        layer_specs.emplace_back(std::string(tok[0].text), number(tok[1].text, vcol + tok[1].column - 1));
      } else if (key == "substrate") substrate_name = std::string(value);
      else unknown();
    } else if (section == "beam") {
      if (key == "energy_kev") cfg.beam.energy_kev = number(value, vcol);
      else if (key == "radius_nm") cfg.beam.radius_nm = number(value, vcol);
      else if (key == "trajectories") cfg.beam.trajectories = integer(value, vcol);
      else if (key == "cutoff_ev") cfg.beam.cutoff_ev = number(value, vcol);
      else if (key == "seed") cfg.beam.seed = integer(value, vcol);
      else unknown();
    } else if (section == "transport") {
      if (key == "max_depth_nm") cfg.options.max_depth_nm = number(value, vcol);
      else if (key == "max_deposit_segment_nm") cfg.options.max_deposit_segment_nm = number(value, vcol);
      else if (key == "chunk_size") cfg.options.chunk_size = integer(value, vcol);
      else if (key == "record_substrate_events") {
        if (value == "true") cfg.options.record_substrate_events = true;
        else if (value == "false") cfg.options.record_substrate_events = false;
        else throw FormatError(source, lineno, vcol, "expected true or false");
      } else unknown();
    }
  }

  auto resolve = [&](const std::string& name, const char* field) {
    if (const auto it = pending.find(name); it != pending.end()) {
      const auto& p = it->second;
      if (!p.formula.empty() && !p.elements.empty())
        throw ValidationError(field, "material '" + name + "' gives both formula and elements");
      if (!p.formula.empty()) return Material::from_formula(name, p.density, p.formula);
      return Material(name, p.density, p.elements);
    }
    Material m;
    if (materials::builtin(name, m)) return m;
    throw ValidationError(field, "unknown material '" + name + "'");
  };

  if (substrate_name.empty()) throw ValidationError("stack.substrate", "no substrate given");
  std::vector<Layer> layers;
  for (const auto& [name, thickness] : layer_specs)
    layers.push_back({resolve(name, "stack.layer"), thickness});
  cfg.stack = LayerStack(std::move(layers), resolve(substrate_name, "stack.substrate"));
  cfg.beam.validate();
  return cfg;
}

inline TransportConfig load_transport_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open stack configuration '" + path + "'");
  return parse_transport_config(is, path);
}

}  // namespace ebl
