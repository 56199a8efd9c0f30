#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/psf/fit.hpp"
#include "ebl/psf/radial_psf.hpp"

namespace ebl {

// Radial table CSV. Free comments start with "# ", machine-read metadata
// with "#! key = value"; then the column header and one row per bin.
inline void write_psf_csv(std::ostream& os, const RadialPSF& psf,
                          const std::vector<std::string>& header = {}) {
  auto f = text::format_double;
  for (const auto& h : header) os << "# " << h << '\n';
  os << "#! bins = " << psf.bins() << '\n';
  os << "#! first_edge_nm = " << f(psf.binning.first_edge_nm) << '\n';
  os << "#! last_edge_nm = " << f(psf.binning.last_edge_nm) << '\n';
  os << "#! trajectories = " << psf.trajectories << '\n';
  os << "#! overflow_incident_ev = " << f(psf.overflow_incident_ev) << '\n';
  os << "#! overflow_backscattered_ev = " << f(psf.overflow_backscattered_ev) << '\n';
  os << "#! reference_energy_ev = " << f(psf.reference_energy_ev) << '\n';
  os << "#! depth_extent_nm = " << f(psf.depth_extent_nm) << '\n';
  os << "#! resist_thickness_nm = " << f(psf.resist_thickness_nm) << '\n';
  if (!psf.source.empty()) os << "#! source = " << psf.source << '\n';
  os << "bin_center_nm,incident_density,backscattered_density\n";
  for (std::size_t k = 0; k < psf.bins(); ++k)
    os << f(psf.bin_center(k)) << ',' << f(psf.incident[k]) << ',' << f(psf.backscattered[k])
       << '\n';
}

inline RadialPSF read_psf_csv(std::istream& is, const std::string& source = "psf") {
  std::map<std::string, std::string> meta;
  RadialPSF psf;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("#!")) {
      const auto body = t.substr(2);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw FormatError(source, lineno, 3, "bad metadata line");
      meta[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
      continue;
    }
    if (t.front() == '#') continue;
    if (!header_seen) {
      if (t != "bin_center_nm,incident_density,backscattered_density")
        throw FormatError(source, lineno, 1, "unexpected column header");
      header_seen = true;
      continue;
    }
    double cols[3];
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto comma = k < 2 ? t.find(',', start) : t.size();
      if (comma == std::string_view::npos || !text::parse_double(t.substr(start, comma - start), cols[k]))
        throw FormatError(source, lineno, start + 1, "bad numeric field");
      start = comma + 1;
    }
    psf.incident.push_back(cols[1]);
    psf.backscattered.push_back(cols[2]);
  }
  auto number = [&](const char* key) {
    const auto it = meta.find(key);
    double v = 0.0;
    if (it == meta.end() || !text::parse_double(it->second, v))
      throw FormatError(source + ": missing or invalid metadata '" + key + "'");
    return v;
  };
  psf.binning.count = static_cast<std::size_t>(number("bins"));
  psf.binning.first_edge_nm = number("first_edge_nm");
  psf.binning.last_edge_nm = number("last_edge_nm");
  if (psf.incident.size() != psf.binning.count)
    throw FormatError(source + ": row count does not match 'bins'");
  psf.binning.validate();
  psf.edges = psf.binning.edges();
  psf.trajectories = static_cast<std::uint64_t>(number("trajectories"));
  psf.overflow_incident_ev = number("overflow_incident_ev");
  psf.overflow_backscattered_ev = number("overflow_backscattered_ev");
  psf.reference_energy_ev = number("reference_energy_ev");
  psf.depth_extent_nm = number("depth_extent_nm");
  psf.resist_thickness_nm = number("resist_thickness_nm");
  if (const auto it = meta.find("source"); it != meta.end()) psf.source = it->second;
  return psf;
}

inline RadialPSF load_psf_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open PSF table '" + path + "'");
  return read_psf_csv(is, path);
}

inline void save_psf_csv(const std::string& path, const RadialPSF& psf,
                         const std::vector<std::string>& header = {}) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  write_psf_csv(os, psf, header);
  if (!os) throw IoError("write failed: " + path);
}

inline void write_angular_csv(std::ostream& os, const AngularFit& fit,
                              const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "bin_center_deg,energy_ev,gaussian_fit_ev\n";
  for (std::size_t k = 0; k < fit.bin_centers_deg.size(); ++k) {
    const double d = (fit.bin_centers_deg[k] - fit.mu_deg) / fit.sigma_deg;
    os << text::format_double(fit.bin_centers_deg[k]) << ',' << text::format_double(fit.weights_ev[k])
       << ',' << text::format_double(fit.amplitude * std::exp(-0.5 * d * d)) << '\n';
  }
}

}  // namespace ebl
