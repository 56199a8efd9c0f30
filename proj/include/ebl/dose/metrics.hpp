#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "ebl/dose/trace.hpp"

namespace ebl {

struct MetricOptions {
  double section_nm = 300.0;       // central bridge section used for falloff and homogeneity
  double plateau_depth_nm = 100.0; // trace points at least this far inside the exposed region
  double step_nm = 2.5;            // trace sample spacing
};

struct EdgeDrop {
  double exposed_dose = 0.0;  // plateau mean
  double gap_min = 0.0;
  double ratio = 0.0;         // exposed_dose / gap_min
};

struct GeometryMetrics {
  double falloff_ratio = 0.0;
  EdgeDrop edge_drop;
  double eb_ei_center = 0.0;
  bool eb_ei_infinite = false;  // incident dose at the centre is zero
  double saddle_variance = 0.0;
  double center_total = 0.0;
  double center_incident = 0.0;
  double center_backscattered = 0.0;
};

namespace detail {

inline double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

}  // namespace detail

// Bridge section length actually used: the configured section, or the whole
// gap when the gap is shorter.
inline double bridge_section(const ProbeLines& probes, const MetricOptions& opt = {}) {
  return std::min(opt.section_nm, probes.bridge_extent);
}

// Values of a trace channel whose distance from the trace midpoint satisfies `keep`.
template <class Keep>
std::vector<double> select_by_offset(const TraceProfile& t, const std::vector<double>& values,
                                     Keep&& keep) {
  const double mid = 0.5 * t.positions.back();
  std::vector<double> out;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (keep(std::abs(t.positions[k] - mid))) out.push_back(values[k]);
  return out;
}

inline GeometryMetrics compute_metrics(const DoseGrid& dose, const ProbeLines& probes,
                                       const MetricOptions& opt = {}) {
  probes.validate();
  const double eps = 1e-9;
  const double half_section = 0.5 * bridge_section(probes, opt);
  const double half_gap = 0.5 * probes.bridge_extent;

  const auto vt = extract_trace(dose, probes.vertical, samples_for(probes.vertical, opt.step_nm));
  GeometryMetrics m;

  const auto section = select_by_offset(vt, vt.total, [&](double d) { return d <= half_section + eps; });
  const auto [lo, hi] = std::minmax_element(section.begin(), section.end());
  m.falloff_ratio = detail::safe_ratio(*hi, *lo);

  const auto gap = select_by_offset(vt, vt.total, [&](double d) { return d <= half_gap + eps; });
  const auto plateau = select_by_offset(
      vt, vt.total, [&](double d) { return d >= half_gap + opt.plateau_depth_nm - eps; });
  require(!plateau.empty(), "probes.exposed_margin",
          "vertical trace does not reach the exposed plateau depth");
  m.edge_drop.exposed_dose = std::accumulate(plateau.begin(), plateau.end(), 0.0) /
                             static_cast<double>(plateau.size());
  m.edge_drop.gap_min = *std::min_element(gap.begin(), gap.end());
  m.edge_drop.ratio = detail::safe_ratio(m.edge_drop.exposed_dose, m.edge_drop.gap_min);

  const Point c = probes.center();
  m.center_incident = sample_bilinear(dose.incident, c.x, c.y);
  m.center_backscattered = sample_bilinear(dose.backscattered, c.x, c.y);
  m.center_total = m.center_incident + m.center_backscattered;
  // FFT round-off leaves values near 1e-16 of the peak where the true dose
  // is zero; anything below this floor counts as no incident dose.
  const double incident_floor = 1e-12 * dose.incident.max();
  if (m.center_incident > incident_floor) {
    m.eb_ei_center = m.center_backscattered / m.center_incident;
  } else {
    m.eb_ei_center = std::numeric_limits<double>::infinity();
    m.eb_ei_infinite = true;
  }

  // Homogeneity over the rectangle spanned by the central section (along the
  // vertical trace) and the horizontal trace.
  const auto& v = probes.vertical;
  const auto& h = probes.horizontal;
  const double vl = v.length(), hl = h.length();
  const Point u{(v.b.x - v.a.x) / vl, (v.b.y - v.a.y) / vl};
  const Point w{(h.b.x - h.a.x) / hl, (h.b.y - h.a.y) / hl};
  const auto ns = static_cast<long>(std::floor(half_section / opt.step_nm + eps));
  const auto nt = static_cast<long>(std::floor(0.5 * hl / opt.step_nm + eps));
  std::vector<double> values;
  for (long a = -ns; a <= ns; ++a) {
    for (long b = -nt; b <= nt; ++b) {
      const double s = a * opt.step_nm, t = b * opt.step_nm;
      const double x = c.x + s * u.x + t * w.x, y = c.y + s * u.y + t * w.y;
      values.push_back(sample_bilinear(dose.total, x, y));
    }
  }
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double val : values) var += (val - mean) * (val - mean);
  var /= n;
  m.saddle_variance = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  return m;
}

// One "metric,value" row per quantity; infinite ratios are written as "inf".
inline void write_metrics_csv(std::ostream& os, const GeometryMetrics& m,
                              const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  auto f = text::format_double;
  os << "metric,value\n";
  os << "falloff_ratio," << f(m.falloff_ratio) << '\n';
  os << "edge_exposed_dose," << f(m.edge_drop.exposed_dose) << '\n';
  os << "edge_gap_min," << f(m.edge_drop.gap_min) << '\n';
  os << "edge_drop_ratio," << f(m.edge_drop.ratio) << '\n';
  os << "eb_ei_center," << f(m.eb_ei_center) << '\n';
  os << "eb_ei_infinite," << (m.eb_ei_infinite ? 1 : 0) << '\n';
  os << "saddle_variance," << f(m.saddle_variance) << '\n';
  os << "center_total," << f(m.center_total) << '\n';
  os << "center_incident," << f(m.center_incident) << '\n';
  os << "center_backscattered," << f(m.center_backscattered) << '\n';
}

}  // namespace ebl
