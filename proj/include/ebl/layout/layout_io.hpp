#pragma once

// Layout text format (one statement per line, '#' starts a comment):
//
//   ebl-layout 1
//   bounds WIDTH HEIGHT                     nm
//   base_dose DOSE                          uC/cm^2
//   probes VX0 VY0 VX1 VY1 HX0 HY0 HX1 HY1 BRIDGE_EXTENT EXPOSED_MARGIN   (optional)
//   shape TAG DOSE_FACTOR
//     X Y                                   one vertex per line, >= 3
//   end
//
// Tags are single tokens. Writing always produces the canonical form:
// shortest round-trip numbers, single spaces, two-space vertex indent.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/layout/layout.hpp"

namespace ebl {

inline void write_layout(std::ostream& os, const LayoutDocument& doc) {
  auto f = text::format_double;
  const auto& l = doc.layout;
  os << "ebl-layout 1\n";
  os << "bounds " << f(l.width) << ' ' << f(l.height) << '\n';
  os << "base_dose " << f(l.base_dose) << '\n';
  if (doc.probes) {
    const auto& p = *doc.probes;
    os << "probes " << f(p.vertical.a.x) << ' ' << f(p.vertical.a.y) << ' ' << f(p.vertical.b.x)
       << ' ' << f(p.vertical.b.y) << ' ' << f(p.horizontal.a.x) << ' ' << f(p.horizontal.a.y)
       << ' ' << f(p.horizontal.b.x) << ' ' << f(p.horizontal.b.y) << ' ' << f(p.bridge_extent)
       << ' ' << f(p.exposed_margin) << '\n';
  }
  for (const auto& s : l.shapes) {
    os << "shape " << s.tag << ' ' << f(s.dose_factor) << '\n';
    for (const auto& v : s.polygon) os << "  " << f(v.x) << ' ' << f(v.y) << '\n';
    os << "end\n";
  }
}

inline std::string layout_to_string(const LayoutDocument& doc) {
  std::ostringstream os;
  write_layout(os, doc);
  return os.str();
}

inline LayoutDocument parse_layout(std::istream& is, const std::string& source = "layout") {
  LayoutDocument doc;
  auto& l = doc.layout;
  bool header = false, have_bounds = false, have_dose = false;
  Shape* open = nullptr;
  std::size_t open_line = 0;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = text::tokenize(line);
    if (tok.empty()) continue;
    auto fail = [&](std::size_t col, const std::string& what) -> void {
      throw FormatError(source, lineno, col, what);
    };
    auto num = [&](std::size_t i) {
      double v = 0.0;
      if (!text::parse_double(tok[i].text, v) || !std::isfinite(v)) fail(tok[i].column, "expected a number");
      return v;
    };
    auto expect = [&](std::size_t n) {
      if (tok.size() != n)
        fail(tok.size() > n ? tok[n].column : tok.back().column + tok.back().text.size(),
             "expected " + std::to_string(n - 1) + " argument(s) for '" + std::string(tok[0].text) + "'");
    };

    const auto kw = tok[0].text;
    if (!header) {
      if (kw != "ebl-layout" || tok.size() != 2 || tok[1].text != "1")
        fail(tok[0].column, "expected header 'ebl-layout 1'");
      header = true;
      continue;
    }
    if (open) {
      if (kw == "end") {
        expect(1);
        if (open->polygon.size() < 3)
          throw GeometryError(open->tag, "polygon needs at least 3 vertices (line " +
                                             std::to_string(open_line) + ")");
        open = nullptr;
        continue;
      }
      expect(2);
      open->polygon.push_back({num(0), num(1)});
      continue;
    }
    if (kw == "bounds") {
      expect(3);
      l.width = num(1);
      l.height = num(2);
      have_bounds = true;
    } else if (kw == "base_dose") {
      expect(2);
      l.base_dose = num(1);
      have_dose = true;
    } else if (kw == "probes") {
      expect(11);
      ProbeLines p;
      p.vertical = {{num(1), num(2)}, {num(3), num(4)}};
      p.horizontal = {{num(5), num(6)}, {num(7), num(8)}};
      p.bridge_extent = num(9);
      p.exposed_margin = num(10);
      doc.probes = p;
    } else if (kw == "shape") {
      expect(3);
      Shape s;
      s.tag = std::string(tok[1].text);
      s.dose_factor = num(2);
      if (!(s.dose_factor > 0.0)) fail(tok[2].column, "dose factor must be positive");
      l.shapes.push_back(std::move(s));
      open = &l.shapes.back();
      open_line = lineno;
    } else {
      fail(tok[0].column, "unknown statement '" + std::string(kw) + "'");
    }
  }
  if (!header) throw FormatError(source, lineno, 1, "missing 'ebl-layout 1' header");
  if (open) throw FormatError(source, open_line, 1, "shape '" + open->tag + "' is not closed with 'end'");
  if (!have_bounds) throw FormatError(source, lineno, 1, "missing 'bounds'");
  if (!have_dose) throw FormatError(source, lineno, 1, "missing 'base_dose'");
  l.validate();
  if (doc.probes) doc.probes->validate();
  return doc;
}

inline LayoutDocument parse_layout_string(const std::string& s, const std::string& source = "layout") {
  std::istringstream is(s);
  return parse_layout(is, source);
}

inline LayoutDocument load_layout(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open layout '" + path + "'");
  return parse_layout(is, path);
}

inline void save_layout(const std::string& path, const LayoutDocument& doc) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write layout '" + path + "'");
  write_layout(os, doc);
}

}  // namespace ebl
