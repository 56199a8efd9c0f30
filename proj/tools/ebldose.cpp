// ebldose: command-line frontend for the dose-simulation pipeline.
//
//   simulate         transport run -> event dump, summary, backscatter exits
//   psf              event dump -> radial tables, power-law and angular fits
//   dosemap          layout + PSF -> dose grids, probe traces, bridge metrics
//   pec              layout + PSF -> corrected layout and iteration log
//   sweep            layouts + layer PSFs -> bridge states over base dose
//   reproduce-paper  the whole chain at desk scale with a comparison report
//
// Exit codes: 0 success, 1 validation, 2 numeric/runtime, 3 I/O or format.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ebl/dose/grid_io.hpp"
#include "ebl/dose/metrics.hpp"
#include "ebl/layout/geometry.hpp"
#include "ebl/layout/layout_io.hpp"
#include "ebl/pec/pec.hpp"
#include "ebl/pipeline.hpp"
#include "ebl/psf/fit.hpp"
#include "ebl/psf/psf_io.hpp"
#include "ebl/transport/record_io.hpp"
#include "ebl/version.hpp"
#include "ebl/window/window.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ebl;

namespace {

struct Global {
  unsigned threads = 0;
  bool json = false;
  std::uint64_t seed = 1;
  bool seed_given = false;
};

// Inputs and parameters that determine a command's data outputs. Thread
// count and output location are deliberately left out.
class Fingerprint {
 public:
  void add(const std::string& key, const std::string& value) { text_ += key + '=' + value + '\n'; }
  void add(const std::string& key, double value) { add(key, text::format_double(value)); }
  void add_file(const std::string& key, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    add(key, text::hex64(text::fnv1a(ss.str())));
  }
  std::string hex() const { return text::hex64(text::fnv1a(text_)); }

 private:
  std::string text_;
};

// Files written by one command; removed again if the command fails.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    auto p = dir_ / name;
    written_.push_back(p);
    return p;
  }

  void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto p = path(name);
    std::ofstream os(p);
    if (!os) throw IoError("cannot write " + p.string());
    body(os);
    if (!os) throw IoError("write failed: " + p.string());
  }

  void binary(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto p = path(name);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write " + p.string());
    body(os);
    if (!os) throw IoError("write failed: " + p.string());
  }

  void discard() noexcept {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  const std::vector<fs::path>& written() const noexcept { return written_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

std::vector<std::string> metadata(const Fingerprint& fp, std::uint64_t seed) {
  return {std::string("tool = ") + kToolName + ' ' + kVersion, "config_hash = " + fp.hex(),
          "seed = " + std::to_string(seed)};
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

std::string num(double v) { return text::format_double(v); }

// ---------------------------------------------------------------- layouts

struct LayoutSource {
  std::string layout_path;
  std::string geometry;
  std::vector<std::string> params;

  void add_options(CLI::App* sub) {
    sub->add_option("--layout", layout_path, "layout file");
    sub->add_option("--geometry", geometry,
                    "built-in design: thin-dolan, l-shape, horseshoe or x-junction");
    sub->add_option("--param", params, "geometry parameter override KEY=VALUE (repeatable)");
  }

  std::string name() const {
    if (!geometry.empty()) return geometry;
    return fs::path(layout_path).stem().string();
  }

  LayoutDocument load(Fingerprint& fp) const {
    if (layout_path.empty() == geometry.empty())
      throw ValidationError("layout", "give exactly one of --layout or --geometry");
    if (!layout_path.empty()) {
      if (!params.empty()) throw ValidationError("param", "--param applies to --geometry only");
      require_file(layout_path, "layout file");
      fp.add_file("layout", layout_path);
      return load_layout(layout_path);
    }
    const auto kind = geometry_from_string(geometry);
    if (!kind) throw ValidationError("geometry", "unknown design '" + geometry + "'");
    GeometryParams p;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      double v = 0.0;
      if (eq == std::string::npos || !text::parse_double(kv.substr(eq + 1), v))
        throw ValidationError("param", "expected KEY=VALUE, got '" + kv + "'");
      set_geometry_param(p, kv.substr(0, eq), v);
    }
    fp.add("geometry", geometry);
    for (const auto& [key, member] : geometry_fields()) fp.add(std::string(key), p.*member);
    auto g = build_geometry(*kind, p);
    return {g.layout, g.probes};
  }
};

struct KernelOptions {
  double pitch = 10.0;
  double half_width = 4000.0;

  void add_options(CLI::App* sub) {
    sub->add_option("--pitch", pitch, "grid pitch in nm")->capture_default_str();
    sub->add_option("--half-width", half_width, "kernel support radius in nm")->capture_default_str();
  }
  void fingerprint(Fingerprint& fp) const {
    fp.add("pitch", pitch);
    fp.add("half_width", half_width);
  }
};

RadialPSF load_table(const std::string& path, Fingerprint& fp, const std::string& key) {
  require_file(path, "PSF table");
  fp.add_file(key, path);
  return load_psf_csv(path);
}

json metrics_json(const GeometryMetrics& m) {
  json j;
  j["falloff_ratio"] = m.falloff_ratio;
  j["edge_drop"] = {{"exposed_dose", m.edge_drop.exposed_dose},
                    {"gap_min", m.edge_drop.gap_min},
                    {"ratio", m.edge_drop.ratio}};
  j["eb_ei_center"] = m.eb_ei_infinite ? json("inf") : json(m.eb_ei_center);
  j["eb_ei_infinite"] = m.eb_ei_infinite;
  j["saddle_variance"] = m.saddle_variance;
  j["center_total"] = m.center_total;
  return j;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string stack;
  std::string out;
  std::optional<std::uint64_t> trajectories;
};

std::string psf_source(const TransportConfig& cfg, const Fingerprint& fp) {
  return "config_hash:" + fp.hex() + " seed:" + std::to_string(cfg.beam.seed) +
         " trajectories:" + std::to_string(cfg.beam.trajectories);
}

TransportConfig load_stack(const std::string& path, const Global& g,
                           std::optional<std::uint64_t> trajectories, Fingerprint& fp) {
  TransportConfig cfg;
  if (path.empty()) {
    cfg.stack = stacks::pmma_mma_si();
    fp.add("stack", "builtin:pmma230-mma500-si");
  } else {
    require_file(path, "stack configuration");
    fp.add_file("stack", path);
    cfg = load_transport_config(path);
  }
  if (g.seed_given) cfg.beam.seed = g.seed;
  if (trajectories) cfg.beam.trajectories = *trajectories;
  cfg.options.threads = g.threads;
  cfg.beam.validate();
  cfg.stack.validate();
  fp.add("seed", std::to_string(cfg.beam.seed));
  fp.add("trajectories", std::to_string(cfg.beam.trajectories));
  return cfg;
}

json cmd_simulate(const SimulateOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  const auto cfg = load_stack(o.stack, g, o.trajectories, fp);
  const auto record = simulate(cfg.stack, cfg.beam, cfg.options);
  const auto meta = metadata(fp, cfg.beam.seed);
  out.binary("events.bin", [&](std::ostream& os) { write_event_dump(os, record.events); });
  out.text("summary.txt", [&](std::ostream& os) { write_summary(os, record, meta); });
  out.text("exits.csv", [&](std::ostream& os) { write_exits_csv(os, record.exits, meta); });

  const auto& s = record.summary;
  json j;
  j["trajectories"] = s.trajectories;
  j["seed"] = cfg.beam.seed;
  j["events"] = record.events.size();
  j["deposited_ev"] = s.deposited_ev;
  j["backscatter_yield"] = s.backscatter_yield();
  j["energy_balance_error"] = s.energy_balance_error();
  j["config_hash"] = fp.hex();
  return j;
}

// ---------------------------------------------------------------- psf

struct PsfOptions {
  std::string events;
  std::string summary;
  std::string exits;
  std::string out;
  std::size_t bins = 128;
  double fit_min = 60.0;
  double fit_max = 360.0;
  std::size_t angular_bins = 45;
};

struct FitReport {
  PowerLawFit power;
  double table_decay = 0.0;
  AngularFit angular;
};

FitReport fit_report(const PsfSet& set, double rmin, double rmax, std::size_t angular_bins) {
  FitReport r;
  r.power = fit_power_law(set.all, Channel::backscattered, rmin, rmax);
  const double d0 = set.all.density(Channel::backscattered, rmin);
  const double d1 = set.all.density(Channel::backscattered, rmax);
  r.table_decay = d0 > 0.0 ? 1.0 - d1 / d0 : 0.0;
  r.angular = fit_angular(set.exits, angular_bins);
  return r;
}

void write_fit_report(std::ostream& os, const FitReport& r, const std::vector<std::string>& meta) {
  for (const auto& m : meta) os << "# " << m << '\n';
  const double z = 1.959963984540054;
  const auto& p = r.power;
  os << "power_law_a = " << num(p.a) << '\n';
  os << "power_law_a_ci95 = " << num(p.a * std::exp(-z * p.log_a_stderr)) << ' '
     << num(p.a * std::exp(z * p.log_a_stderr)) << '\n';
  os << "power_law_b = " << num(p.b) << '\n';
  os << "power_law_b_ci95 = " << num(p.b - z * p.b_stderr) << ' ' << num(p.b + z * p.b_stderr) << '\n';
  os << "power_law_r_squared = " << num(p.r_squared) << '\n';
  os << "fit_range_nm = " << num(p.r_min) << ' ' << num(p.r_max) << '\n';
  os << "fit_points = " << p.points << '\n';
  os << "fit_decay = " << num(p.decay(p.r_min, p.r_max)) << '\n';
  os << "table_decay = " << num(r.table_decay) << '\n';
  const auto& a = r.angular;
  os << "angular_mu_deg = " << num(a.mu_deg) << '\n';
  os << "angular_mu_ci95 = " << num(a.mu_deg - z * a.mu_stderr) << ' ' << num(a.mu_deg + z * a.mu_stderr) << '\n';
  os << "angular_sigma_deg = " << num(a.sigma_deg) << '\n';
  os << "angular_sigma_ci95 = " << num(a.sigma_deg - z * a.sigma_stderr) << ' '
     << num(a.sigma_deg + z * a.sigma_stderr) << '\n';
}

json fit_json(const FitReport& r) {
  const double z = 1.959963984540054;
  const auto& p = r.power;
  const auto& a = r.angular;
  json j;
  j["a"] = p.a;
  j["a_ci95"] = {p.a * std::exp(-z * p.log_a_stderr), p.a * std::exp(z * p.log_a_stderr)};
  j["b"] = p.b;
  j["b_ci95"] = {p.b - z * p.b_stderr, p.b + z * p.b_stderr};
  j["r_squared"] = p.r_squared;
  j["fit_range_nm"] = {p.r_min, p.r_max};
  j["table_decay"] = r.table_decay;
  j["mu_deg"] = a.mu_deg;
  j["mu_ci95"] = {a.mu_deg - z * a.mu_stderr, a.mu_deg + z * a.mu_stderr};
  j["sigma_deg"] = a.sigma_deg;
  j["sigma_ci95"] = {a.sigma_deg - z * a.sigma_stderr, a.sigma_deg + z * a.sigma_stderr};
  return j;
}

void write_psf_outputs(Outputs& out, const PsfSet& set, const FitReport& fit,
                       const std::vector<std::string>& meta) {
  out.text("psf.csv", [&](std::ostream& os) { write_psf_csv(os, set.all, meta); });
  for (std::size_t l = 0; l < set.layers.size(); ++l)
    out.text("psf_layer" + std::to_string(l) + ".csv",
             [&](std::ostream& os) { write_psf_csv(os, set.layers[l], meta); });
  out.text("angular.csv", [&](std::ostream& os) { write_angular_csv(os, fit.angular, meta); });
  out.text("fit.txt", [&](std::ostream& os) { write_fit_report(os, fit, meta); });
}

json cmd_psf(const PsfOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  require_file(o.events, "event dump");
  const auto dir = fs::path(o.events).parent_path();
  const auto summary_path = o.summary.empty() ? (dir / "summary.txt").string() : o.summary;
  const auto exits_path = o.exits.empty() ? (dir / "exits.csv").string() : o.exits;
  require_file(summary_path, "run summary");
  require_file(exits_path, "exit list");
  fp.add_file("events", o.events);
  fp.add_file("summary", summary_path);
  fp.add_file("exits", exits_path);
  fp.add("bins", std::to_string(o.bins));
  fp.add("fit_min", o.fit_min);
  fp.add("fit_max", o.fit_max);
  fp.add("angular_bins", std::to_string(o.angular_bins));

  DepositionRecord record;
  record.events = read_event_dump(o.events);
  if (record.events.empty()) throw FormatError(o.events + ": event dump is empty");
  std::ifstream ss(summary_path);
  const auto summary = read_summary(ss, summary_path);
  record.summary = summary.summary;
  record.layer_boundaries_nm = summary.layer_boundaries_nm;
  std::ifstream es(exits_path);
  record.exits = read_exits_csv(es, exits_path);

  std::uint64_t seed = g.seed;
  if (const auto it = summary.meta.find("seed"); it != summary.meta.end() && !g.seed_given)
    text::parse_int(it->second, seed);
  std::string source = "config_hash:" + fp.hex() + " seed:" + std::to_string(seed);
  const auto set = psf_set_from(record, o.bins, source);
  const auto fit = fit_report(set, o.fit_min, o.fit_max, o.angular_bins);
  write_psf_outputs(out, set, fit, metadata(fp, seed));
  auto j = fit_json(fit);
  j["config_hash"] = fp.hex();
  return j;
}

// ---------------------------------------------------------------- dosemap

struct DosemapOptions {
  LayoutSource layout;
  KernelOptions kernel;
  std::string psf;
  std::string out;
  bool oracle = false;
  bool dump_kernel = false;
};

json cmd_dosemap(const DosemapOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  const auto doc = o.layout.load(fp);
  const auto psf = load_table(o.psf, fp, "psf");
  o.kernel.fingerprint(fp);
  fp.add("oracle", o.oracle ? "1" : "0");
  const auto kernel = build_kernel(psf, o.kernel.pitch, o.kernel.half_width);
  const auto exposure = rasterize(doc.layout, o.kernel.pitch);
  const auto dose = convolve(exposure, kernel, o.oracle, g.threads);
  const auto meta = metadata(fp, g.seed);

  out.binary("exposure.grid", [&](std::ostream& os) { write_grid(os, exposure); });
  out.binary("dose_total.grid", [&](std::ostream& os) { write_grid(os, dose.total); });
  out.binary("dose_incident.grid", [&](std::ostream& os) { write_grid(os, dose.incident); });
  out.binary("dose_backscattered.grid", [&](std::ostream& os) { write_grid(os, dose.backscattered); });
  out.binary("dose_total.pgm", [&](std::ostream& os) { write_pgm(os, dose.total, meta); });
  if (o.dump_kernel)
    out.binary("kernel_total.grid", [&](std::ostream& os) { write_grid(os, kernel_total_grid(kernel)); });

  json j;
  j["layout"] = o.layout.name();
  j["grid"] = {exposure.width, exposure.height};
  j["pitch_nm"] = o.kernel.pitch;
  j["kernel_integral"] = kernel.integral();
  j["kernel_discarded_backscattered"] = kernel.discarded_backscattered;
  j["method"] = o.oracle ? "direct" : "fft";
  if (doc.probes) {
    const auto& p = *doc.probes;
    const auto vt = extract_trace(dose, p.vertical, samples_for(p.vertical, 2.5));
    const auto ht = extract_trace(dose, p.horizontal, samples_for(p.horizontal, 2.5));
    const auto m = compute_metrics(dose, p);
    out.text("trace_vertical.csv", [&](std::ostream& os) { write_trace_csv(os, vt, meta); });
    out.text("trace_horizontal.csv", [&](std::ostream& os) { write_trace_csv(os, ht, meta); });
    out.text("metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, m, meta); });
    j["metrics"] = metrics_json(m);
  }
  j["config_hash"] = fp.hex();
  return j;
}

// ---------------------------------------------------------------- pec

struct PecCliOptions {
  LayoutSource layout;
  KernelOptions kernel;
  std::string psf;
  std::string out;
  std::optional<double> target;
  PecOptions pec;
};

json cmd_pec(const PecCliOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  const auto doc = o.layout.load(fp);
  const auto psf = load_table(o.psf, fp, "psf");
  o.kernel.fingerprint(fp);
  PecOptions opt = o.pec;
  opt.target = o.target.value_or(doc.layout.base_dose);
  fp.add("target", opt.target);
  fp.add("tolerance", opt.tolerance);
  fp.add("max_iterations", std::to_string(opt.max_iterations));
  fp.add("clamp", num(opt.min_factor) + ' ' + num(opt.max_factor));
  const auto kernel = build_kernel(psf, o.kernel.pitch, o.kernel.half_width);
  const auto result = correct(doc.layout, kernel, opt);
  const auto meta = metadata(fp, g.seed);

  LayoutDocument corrected{result.layout, doc.probes};
  out.text("corrected.layout", [&](std::ostream& os) {
    for (const auto& m : meta) os << "# " << m << '\n';
    write_layout(os, corrected);
  });
  out.text("pec_log.csv", [&](std::ostream& os) { write_pec_log(os, result, meta); });

  json j;
  j["layout"] = o.layout.name();
  j["target"] = opt.target;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["residual"] = result.residual;
  json factors = json::array();
  for (const auto& s : result.layout.shapes) factors.push_back({{"tag", s.tag}, {"factor", s.dose_factor}});
  j["factors"] = factors;
  j["warnings"] = result.warnings;
  if (doc.probes) {
    // Reported only: the gap is not a control target.
    const auto dose = convolve_fast(rasterize(result.layout, o.kernel.pitch), kernel);
    const auto m = compute_metrics(dose, *doc.probes);
    j["gap_center_dose"] = m.center_total;
    j["gap_min_dose"] = m.edge_drop.gap_min;
  }
  j["config_hash"] = fp.hex();
  return j;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::vector<std::string> geometries;
  std::vector<std::string> layouts;
  std::string psf_top;
  std::string psf_bottom;
  KernelOptions kernel;
  DoseRange range;
  std::optional<double> mma_clearing;
  std::optional<double> pmma_collapse;
  double sensitivity_ratio = 3.5;
  std::string calibrate_on = "horseshoe";
  double calibrate_width = 260.0;
  std::string out;
};

json cmd_sweep(const SweepOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  std::vector<std::pair<std::string, LayoutDocument>> designs;
  auto geometries = o.geometries;
  if (geometries.empty() && o.layouts.empty()) geometries = {"thin-dolan", "l-shape", "horseshoe"};
  for (const auto& name : geometries) {
    LayoutSource src;
    src.geometry = name;
    designs.emplace_back(name, src.load(fp));
  }
  for (const auto& path : o.layouts) {
    LayoutSource src;
    src.layout_path = path;
    designs.emplace_back(src.name(), src.load(fp));
  }
  const auto top = load_table(o.psf_top, fp, "psf_top");
  const auto bottom = load_table(o.psf_bottom, fp, "psf_bottom");
  o.kernel.fingerprint(fp);
  fp.add("range", num(o.range.first) + ' ' + num(o.range.last) + ' ' + num(o.range.step));
  (void)o.range.doses();  // validates before any convolution

  const auto ktop = build_kernel(top, o.kernel.pitch, o.kernel.half_width);
  const auto kbottom = build_kernel(bottom, o.kernel.pitch, o.kernel.half_width);
  std::map<std::string, std::pair<BridgeDoses, double>> refs;
  for (const auto& [name, doc] : designs) {
    if (!doc.probes) throw ValidationError("layout", "'" + name + "' has no probe lines");
    if (refs.count(name)) throw ValidationError("layout", "duplicate design name '" + name + "'");
    const auto exposure = rasterize(doc.layout, o.kernel.pitch);
    const LayerDose ld{convolve_fast(exposure, ktop), convolve_fast(exposure, kbottom)};
    refs[name] = {bridge_doses(ld, *doc.probes), doc.layout.base_dose};
  }

  ResistThresholds t;
  bool calibrated = false;
  if (o.mma_clearing || o.pmma_collapse) {
    if (!o.mma_clearing || !o.pmma_collapse)
      throw ValidationError("thresholds", "give both --mma-clearing and --pmma-collapse");
    t = ResistThresholds::from_ratio(*o.mma_clearing, o.sensitivity_ratio, *o.pmma_collapse);
  } else {
    const auto it = refs.find(o.calibrate_on);
    if (it == refs.end())
      throw ValidationError("calibrate-on", "'" + o.calibrate_on + "' is not among the swept designs");
    t = calibrate(it->second.first, it->second.second, o.range, o.calibrate_width, o.sensitivity_ratio);
    calibrated = true;
    fp.add("calibrate", o.calibrate_on + ' ' + num(o.calibrate_width));
  }
  t.validate();
  fp.add("thresholds", num(t.mma_clearing) + ' ' + num(t.pmma_clearing) + ' ' + num(t.pmma_collapse));
  const auto meta = metadata(fp, g.seed);

  json j;
  j["thresholds"] = {{"mma_clearing", t.mma_clearing},
                     {"pmma_clearing", t.pmma_clearing},
                     {"pmma_collapse", t.pmma_collapse},
                     {"sensitivity_ratio", t.sensitivity_ratio()},
                     {"calibrated_on", calibrated ? json(o.calibrate_on) : json(nullptr)}};
  json windows = json::array();
  std::vector<std::pair<std::string, SweepResult>> results;
  for (const auto& [name, doc] : designs) {
    const auto& [ref, ref_dose] = refs.at(name);
    auto r = sweep(ref, ref_dose, t, o.range);
    out.text("sweep_" + name + ".csv", [&](std::ostream& os) { write_sweep_csv(os, r, meta); });
    json w = {{"design", name}, {"width", r.window_width()}};
    if (r.window) {
      w["first"] = r.window->first;
      w["last"] = r.window->last;
    }
    windows.push_back(w);
    results.emplace_back(name, std::move(r));
  }
  out.text("windows.csv", [&](std::ostream& os) {
    for (const auto& m : meta) os << "# " << m << '\n';
    os << "design,first_formed_dose,last_formed_dose,window_width\n";
    for (const auto& [name, r] : results)
      os << name << ',' << (r.window ? num(r.window->first) : "") << ','
         << (r.window ? num(r.window->last) : "") << ',' << num(r.window_width()) << '\n';
  });
  j["windows"] = windows;
  j["config_hash"] = fp.hex();
  return j;
}

// ---------------------------------------------------------------- reproduce-paper

struct ReproduceOptions {
  std::string stack;
  std::uint64_t trajectories = 200000;
  KernelOptions kernel;
  std::string out;
};

struct Check {
  std::string name;
  std::string value;
  std::string expected;
  bool pass;
};

json cmd_reproduce(const ReproduceOptions& o, const Global& g, Outputs& out) {
  Fingerprint fp;
  const auto cfg = load_stack(o.stack, g, o.trajectories, fp);
  o.kernel.fingerprint(fp);
  const auto meta = metadata(fp, cfg.beam.seed);
  std::vector<Check> checks;
  auto within = [](double v, double lo, double hi) { return v >= lo && v <= hi; };

  const auto set = simulate_psf(cfg, 128, psf_source(cfg, fp));
  const auto fit = fit_report(set, 60.0, 360.0, 45);
  write_psf_outputs(out, set, fit, meta);
  checks.push_back({"backscatter exponent b", num(fit.power.b), "[0.55, 0.95]",
                    within(fit.power.b, 0.55, 0.95)});
  checks.push_back({"angular mu (deg)", num(fit.angular.mu_deg), "[38, 48]",
                    within(fit.angular.mu_deg, 38.0, 48.0)});
  checks.push_back({"angular sigma (deg)", num(fit.angular.sigma_deg), "[12, 22]",
                    within(fit.angular.sigma_deg, 12.0, 22.0)});
  checks.push_back({"decay 60->360 nm", num(fit.table_decay), "[0.65, 0.85]",
                    within(fit.table_decay, 0.65, 0.85)});

  const auto kernels = build_kernel_set(set, o.kernel.pitch, o.kernel.half_width);
  std::map<GeometryKind, GeometryMetrics> metrics;
  std::map<GeometryKind, BridgeDoses> bridge;
  std::map<GeometryKind, double> base;
  for (auto kind : {GeometryKind::thin_dolan, GeometryKind::l_shape, GeometryKind::horseshoe,
                    GeometryKind::x_junction}) {
    const auto geo = build_geometry(kind);
    const auto exposure = rasterize(geo.layout, o.kernel.pitch);
    const auto dose = convolve_fast(exposure, kernels.total);
    metrics[kind] = compute_metrics(dose, geo.probes);
    bridge[kind] = bridge_doses(layer_dose(exposure, kernels), geo.probes);
    base[kind] = geo.layout.base_dose;
    const std::string name(to_string(kind));
    out.text("metrics_" + name + ".csv", [&](std::ostream& os) { write_metrics_csv(os, metrics[kind], meta); });
    const auto vt = extract_trace(dose, geo.probes.vertical, samples_for(geo.probes.vertical, 2.5));
    out.text("trace_vertical_" + name + ".csv", [&](std::ostream& os) { write_trace_csv(os, vt, meta); });
  }
  const double ft = metrics[GeometryKind::thin_dolan].falloff_ratio;
  const double fl = metrics[GeometryKind::l_shape].falloff_ratio;
  const double fh = metrics[GeometryKind::horseshoe].falloff_ratio;
  checks.push_back({"falloff thin/horseshoe", num(ft / fh), "[1.4, 2.2]", within(ft / fh, 1.4, 2.2)});
  checks.push_back({"falloff thin-dolan", num(ft), "20 +/- 40%", within(ft, 12.0, 28.0)});
  checks.push_back({"falloff horseshoe", num(fh), "12 +/- 40%", within(fh, 7.2, 16.8)});
  checks.push_back({"falloff l-shape", num(fl), "12 +/- 40%", within(fl, 7.2, 16.8)});
  const double eh = metrics[GeometryKind::horseshoe].eb_ei_center;
  const double el = metrics[GeometryKind::l_shape].eb_ei_center;
  const double ex = metrics[GeometryKind::x_junction].eb_ei_center;
  const double et = metrics[GeometryKind::thin_dolan].eb_ei_center;
  checks.push_back({"Eb/Ei horseshoe", num(eh), ">= 2", eh >= 2.0});
  checks.push_back({"Eb/Ei l-shape", num(el), ">= 2", el >= 2.0});
  checks.push_back({"Eb/Ei x-junction", num(ex), "> all others", ex > std::max({eh, el, et})});
  const auto& ed = metrics[GeometryKind::thin_dolan].edge_drop;
  checks.push_back({"thin-dolan gap min / plateau", num(ed.gap_min / ed.exposed_dose), "< 0.10",
                    ed.gap_min < 0.1 * ed.exposed_dose});

  const DoseRange range;
  const auto t = calibrate(bridge[GeometryKind::horseshoe], base[GeometryKind::horseshoe], range, 260.0);
  std::map<GeometryKind, double> width;
  for (auto kind : {GeometryKind::thin_dolan, GeometryKind::l_shape, GeometryKind::horseshoe}) {
    const auto r = sweep(bridge[kind], base[kind], t, range);
    width[kind] = r.window_width();
    out.text("sweep_" + std::string(to_string(kind)) + ".csv",
             [&](std::ostream& os) { write_sweep_csv(os, r, meta); });
  }
  const double wh = width[GeometryKind::horseshoe], wl = width[GeometryKind::l_shape],
               wt = width[GeometryKind::thin_dolan];
  checks.push_back({"windows horseshoe > L > thin", num(wh) + " / " + num(wl) + " / " + num(wt),
                    "strict ordering", wh > wl && wl > wt});
  checks.push_back({"thin-dolan window", num(wt), "<= 40", wt <= 40.0});

  PecOptions popt;
  const auto thin = build_geometry(GeometryKind::thin_dolan);
  popt.target = thin.layout.base_dose;
  const auto pec = correct(thin.layout, kernels.total, popt);
  checks.push_back({"PEC thin-dolan residual", num(pec.residual) + " in " + std::to_string(pec.iterations) + " it",
                    "<= 0.01 within 25 iterations", pec.converged && pec.residual <= 0.01});

  out.text("report.txt", [&](std::ostream& os) {
    for (const auto& m : meta) os << "# " << m << '\n';
    os << "trajectories = " << cfg.beam.trajectories << '\n';
    os << "backscatter_yield = " << num(set.summary.backscatter_yield()) << '\n';
    for (const auto& c : checks)
      os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.value << " (expected " << c.expected << ")\n";
  });

  json j;
  j["trajectories"] = cfg.beam.trajectories;
  j["seed"] = cfg.beam.seed;
  j["fit"] = fit_json(fit);
  json cj = json::array();
  for (const auto& c : checks) cj.push_back({{"check", c.name}, {"value", c.value}, {"expected", c.expected}, {"pass", c.pass}});
  j["checks"] = cj;
  j["config_hash"] = fp.hex();
  return j;
}

void print_human(const json& j, const std::string& indent = "") {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      std::cout << indent << it.key() << ":\n";
      print_human(*it, indent + "  ");
    } else if (it->is_array() && !it->empty() && it->front().is_object()) {
      std::cout << indent << it.key() << ":\n";
      for (const auto& e : *it) {
        std::cout << indent << "  -";
        for (auto f = e.begin(); f != e.end(); ++f) std::cout << ' ' << f.key() << '=' << f->dump();
        std::cout << '\n';
      }
    } else {
      std::cout << indent << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"E-beam lithography dose simulation"};
  app.set_version_flag("--version", std::string(kToolName) + ' ' + kVersion);
  app.set_config("--config", "", "run configuration file (TOML/INI); command-line flags win");
  app.require_subcommand(1);
  Global g;
  app.add_option("--threads", g.threads, "worker threads (0 = all cores); never changes results");
  app.add_flag("--json", g.json, "print the summary as JSON");
  app.add_option("--seed", g.seed, "random seed (overrides the stack configuration)");

  SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo transport through the resist stack");
  s_sim->add_option("--stack", sim.stack, "stack/beam configuration (default: PMMA 230 nm / MMA 500 nm / Si)");
  s_sim->add_option("--trajectories", sim.trajectories, "override the trajectory count");
  s_sim->add_option("--out", sim.out, "output directory")->required();

  PsfOptions psf;
  auto* s_psf = app.add_subcommand("psf", "radial PSF tables and fits from an event dump");
  s_psf->add_option("--events", psf.events, "binary event dump")->required();
  s_psf->add_option("--summary", psf.summary, "run summary (default: next to the dump)");
  s_psf->add_option("--exits", psf.exits, "backscatter exits CSV (default: next to the dump)");
  s_psf->add_option("--bins", psf.bins, "radial bins")->capture_default_str();
  s_psf->add_option("--fit-min", psf.fit_min, "power-law fit range start, nm")->capture_default_str();
  s_psf->add_option("--fit-max", psf.fit_max, "power-law fit range end, nm")->capture_default_str();
  s_psf->add_option("--angular-bins", psf.angular_bins, "exit-angle histogram bins")->capture_default_str();
  s_psf->add_option("--out", psf.out, "output directory")->required();

  DosemapOptions dm;
  auto* s_dm = app.add_subcommand("dosemap", "dose map, probe traces and bridge metrics");
  dm.layout.add_options(s_dm);
  dm.kernel.add_options(s_dm);
  s_dm->add_option("--psf", dm.psf, "radial PSF table")->required();
  s_dm->add_flag("--oracle", dm.oracle, "use direct summation instead of the FFT path");
  s_dm->add_flag("--dump-kernel", dm.dump_kernel, "also write the gridded kernel");
  s_dm->add_option("--out", dm.out, "output directory")->required();

  PecCliOptions pc;
  auto* s_pec = app.add_subcommand("pec", "proximity-effect correction of shape dose factors");
  pc.layout.add_options(s_pec);
  pc.kernel.add_options(s_pec);
  s_pec->add_option("--psf", pc.psf, "radial PSF table")->required();
  s_pec->add_option("--target", pc.target, "target mean dose per shape (default: base dose)");
  s_pec->add_option("--tol", pc.pec.tolerance, "relative tolerance")->capture_default_str();
  s_pec->add_option("--max-iter", pc.pec.max_iterations, "iteration limit")->capture_default_str();
  s_pec->add_option("--min-factor", pc.pec.min_factor, "lower dose-factor clamp")->capture_default_str();
  s_pec->add_option("--max-factor", pc.pec.max_factor, "upper dose-factor clamp")->capture_default_str();
  s_pec->add_option("--out", pc.out, "output directory")->required();

  SweepOptions sw;
  auto* s_sw = app.add_subcommand("sweep", "bridge formation over a base-dose range");
  s_sw->add_option("--geometry", sw.geometries, "built-in design (repeatable)");
  s_sw->add_option("--layout", sw.layouts, "layout file (repeatable)");
  s_sw->add_option("--psf-top", sw.psf_top, "top-layer (PMMA) PSF table")->required();
  s_sw->add_option("--psf-bottom", sw.psf_bottom, "bottom-layer (MMA) PSF table")->required();
  sw.kernel.add_options(s_sw);
  s_sw->add_option("--first", sw.range.first, "first base dose, uC/cm^2")->capture_default_str();
  s_sw->add_option("--last", sw.range.last, "last base dose, uC/cm^2")->capture_default_str();
  s_sw->add_option("--step", sw.range.step, "dose step, uC/cm^2")->capture_default_str();
  s_sw->add_option("--mma-clearing", sw.mma_clearing, "MMA clearing dose (skips calibration)");
  s_sw->add_option("--pmma-collapse", sw.pmma_collapse, "PMMA collapse dose (skips calibration)");
  s_sw->add_option("--sensitivity-ratio", sw.sensitivity_ratio, "PMMA/MMA clearing ratio")->capture_default_str();
  s_sw->add_option("--calibrate-on", sw.calibrate_on, "design used to calibrate thresholds")->capture_default_str();
  s_sw->add_option("--calibrate-width", sw.calibrate_width, "window width to calibrate to")->capture_default_str();
  s_sw->add_option("--out", sw.out, "output directory")->required();

  ReproduceOptions rp;
  auto* s_rp = app.add_subcommand("reproduce-paper", "simulate -> psf -> dosemap x4 -> sweep -> report");
  s_rp->add_option("--stack", rp.stack, "stack/beam configuration (default: PMMA 230 nm / MMA 500 nm / Si)");
  s_rp->add_option("--trajectories", rp.trajectories, "trajectory count")->capture_default_str();
  rp.kernel.add_options(s_rp);
  s_rp->add_option("--out", rp.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  g.seed_given = app.count("--seed") > 0;

  std::string out_dir;
  if (*s_sim) out_dir = sim.out;
  else if (*s_psf) out_dir = psf.out;
  else if (*s_dm) out_dir = dm.out;
  else if (*s_pec) out_dir = pc.out;
  else if (*s_sw) out_dir = sw.out;
  else out_dir = rp.out;
  Outputs out(out_dir);

  try {
    json summary;
    if (*s_sim) summary = cmd_simulate(sim, g, out);
    else if (*s_psf) summary = cmd_psf(psf, g, out);
    else if (*s_dm) summary = cmd_dosemap(dm, g, out);
    else if (*s_pec) summary = cmd_pec(pc, g, out);
    else if (*s_sw) summary = cmd_sweep(sw, g, out);
    else summary = cmd_reproduce(rp, g, out);
    json files = json::array();
    for (const auto& p : out.written()) files.push_back(p.string());
    summary["outputs"] = files;
    if (g.json) std::cout << summary.dump(2) << '\n';
    else print_human(summary);
    return 0;
  } catch (const ebl::Error& e) {
    out.discard();
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    out.discard();
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    out.discard();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
