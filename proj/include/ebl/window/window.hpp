#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/dose/metrics.hpp"

namespace ebl {

// Resist response in deposited-dose units (uC/cm^2 equivalent).
struct ResistThresholds {
  double mma_clearing = 0.0;
  double pmma_clearing = 0.0;
  double pmma_collapse = 0.0;

  double sensitivity_ratio() const { return pmma_clearing / mma_clearing; }

  static ResistThresholds from_ratio(double mma_clearing, double ratio, double pmma_collapse) {
    return {mma_clearing, ratio * mma_clearing, pmma_collapse};
  }

  void validate() const {
    require(mma_clearing > 0.0 && std::isfinite(mma_clearing), "thresholds.mma_clearing",
            "must be positive");
    require(pmma_clearing > mma_clearing, "thresholds.pmma_clearing",
            "must exceed the MMA clearing dose");
    require(pmma_collapse > pmma_clearing && std::isfinite(pmma_collapse),
            "thresholds.pmma_collapse", "must exceed the PMMA clearing dose");
    const double r = sensitivity_ratio();
    require(r >= 3.0 - 1e-12 && r <= 4.0 + 1e-12, "thresholds.sensitivity_ratio",
            "pmma_clearing / mma_clearing must lie in [3, 4], got " + text::format_double(r));
  }
};

enum class BridgeState { no_bridge, formed, collapsed };

inline std::string_view to_string(BridgeState s) {
  switch (s) {
    case BridgeState::no_bridge: return "no-bridge";
    case BridgeState::formed: return "formed";
    case BridgeState::collapsed: return "collapsed";
  }
  return "?";
}

// The two numbers the classifier looks at.
struct BridgeDoses {
  double min_mma = 0.0;   // lowest bottom-layer dose along the undercut span
  double max_pmma = 0.0;  // highest top-layer dose on the bridge section

  BridgeDoses scaled(double k) const { return {min_mma * k, max_pmma * k}; }
};

struct LayerDose {
  DoseGrid pmma;  // top layer
  DoseGrid mma;   // bottom layer
};

inline constexpr double kUndercutOverhangNm = 100.0;

// Reads the bridge doses along the vertical probe. The undercut span is the
// bridge section plus 100 nm on each side.
inline BridgeDoses bridge_doses(const LayerDose& dose, const ProbeLines& probes,
                                const MetricOptions& opt = {}) {
  probes.validate();
  const double eps = 1e-9;
  const double half_section = 0.5 * bridge_section(probes, opt);
  const auto n = samples_for(probes.vertical, opt.step_nm);
  const auto top = extract_trace(dose.pmma, probes.vertical, n);
  const auto bottom = extract_trace(dose.mma, probes.vertical, n);
  const auto p = select_by_offset(top, top.total, [&](double d) { return d <= half_section + eps; });
  const auto m = select_by_offset(bottom, bottom.total, [&](double d) {
    return d <= half_section + kUndercutOverhangNm + eps;
  });
  return {*std::min_element(m.begin(), m.end()), *std::max_element(p.begin(), p.end())};
}

// no-bridge when the bottom layer does not clear under the whole bridge,
// collapsed when the top layer reaches the collapse dose, formed otherwise.
// The checks are applied in that order.
inline BridgeState classify(const BridgeDoses& d, const ResistThresholds& t) {
  t.validate();
  if (d.min_mma < t.mma_clearing) return BridgeState::no_bridge;
  if (d.max_pmma >= t.pmma_collapse) return BridgeState::collapsed;
  return BridgeState::formed;
}

inline BridgeState classify(const LayerDose& dose, const ProbeLines& probes, const ResistThresholds& t) {
  return classify(bridge_doses(dose, probes), t);
}

struct DoseRange {
  double first = 350.0;
  double last = 870.0;
  double step = 20.0;

  std::vector<double> doses() const {
    require(step > 0.0 && std::isfinite(step), "sweep.step", "must be positive");
    require(first >= 0.0 && last >= first, "sweep.range", "must be ascending and non-negative");
    std::vector<double> out;
    for (long k = 0;; ++k) {
      const double d = first + static_cast<double>(k) * step;
      if (d > last + 1e-9 * step) break;
      out.push_back(d);
    }
    return out;
  }
};

struct DoseWindow {
  double first = 0.0;
  double last = 0.0;
  double width = 0.0;  // number of formed doses times the step
};

struct SweepResult {
  std::vector<double> doses;
  std::vector<BridgeState> states;
  std::vector<BridgeDoses> bridge;
  std::optional<DoseWindow> window;
  double step = 0.0;

  double window_width() const { return window ? window->width : 0.0; }
};

// `reference` holds the bridge doses of the layout exposed at `reference_dose`;
// every swept dose is classified from the linearly scaled values.
inline SweepResult sweep(const BridgeDoses& reference, double reference_dose,
                         const ResistThresholds& t, const DoseRange& range) {
  require(reference_dose > 0.0, "sweep.reference_dose", "must be positive");
  t.validate();
  SweepResult r;
  r.step = range.step;
  r.doses = range.doses();
  for (double d : r.doses) {
    const auto b = reference.scaled(d / reference_dose);
    r.bridge.push_back(b);
    r.states.push_back(classify(b, t));
  }
  std::size_t formed = 0;
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    if (k > 0 && r.states[k] < r.states[k - 1])
      throw NumericError("sweep: bridge states are not monotone in dose");
    if (r.states[k] != BridgeState::formed) continue;
    if (!r.window) r.window = DoseWindow{r.doses[k], r.doses[k], 0.0};
    r.window->last = r.doses[k];
    ++formed;
  }
  if (r.window) r.window->width = static_cast<double>(formed) * range.step;
  return r;
}

inline SweepResult sweep(const LayerDose& dose, const ProbeLines& probes, double reference_dose,
                         const ResistThresholds& t, const DoseRange& range) {
  return sweep(bridge_doses(dose, probes), reference_dose, t, range);
}

// Chooses mma_clearing and pmma_collapse so that `reference` forms a bridge
// at exactly round(target_width / step) consecutive swept doses centred in
// the range; pmma_clearing follows from the sensitivity ratio.
inline ResistThresholds calibrate(const BridgeDoses& reference, double reference_dose,
                                  const DoseRange& range, double target_width,
                                  double sensitivity_ratio = 3.5) {
  require(reference.min_mma > 0.0 && reference.max_pmma > 0.0, "calibration.reference",
          "bridge doses must be positive");
  const auto doses = range.doses();
  const auto want = static_cast<std::size_t>(std::lround(target_width / range.step));
  require(want >= 1 && want <= doses.size(), "calibration.target_width",
          "must span between one step and the whole range");
  const std::size_t first = (doses.size() - want) / 2;
  const double lo = doses[first], hi = doses[first + want - 1];
  const double m = reference.min_mma / reference_dose;
  const double p = reference.max_pmma / reference_dose;
  auto t = ResistThresholds::from_ratio(m * (lo - 0.5 * range.step), sensitivity_ratio,
                                        p * (hi + 0.5 * range.step));
  t.validate();
  return t;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r,
                            const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "dose,state,min_mma_bridge_dose,max_pmma_bridge_dose\n";
  for (std::size_t k = 0; k < r.doses.size(); ++k)
    os << text::format_double(r.doses[k]) << ',' << to_string(r.states[k]) << ','
       << text::format_double(r.bridge[k].min_mma) << ','
       << text::format_double(r.bridge[k].max_pmma) << '\n';
}

}  // namespace ebl
