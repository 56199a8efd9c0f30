#pragma once

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ebl/common/binary.hpp"
#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/transport/simulate.hpp"

namespace ebl {

// Event dump: 16-byte header (magic "EBEV", uint32 version, uint64 count)
// followed by packed 17-byte little-endian records
// (float32 x, y, z [nm]; float32 energy [eV]; uint8 channel).
inline constexpr std::array<char, 4> kEventMagic{'E', 'B', 'E', 'V'};
inline constexpr std::uint32_t kEventVersion = 1;
inline constexpr std::size_t kEventRecordBytes = 17;

inline void write_event_dump(std::ostream& os, std::span<const DepositionEvent> events) {
  os.write(kEventMagic.data(), 4);
  binary::write_le<std::uint32_t>(os, kEventVersion);
  binary::write_le<std::uint64_t>(os, events.size());
  for (const auto& ev : events) {
    binary::write_le(os, ev.x);
    binary::write_le(os, ev.y);
    binary::write_le(os, ev.z);
    binary::write_le(os, ev.energy_ev);
    binary::write_le(os, static_cast<std::uint8_t>(ev.channel));
  }
}

inline std::vector<DepositionEvent> read_event_dump(std::istream& is,
                                                    const std::string& source = "events") {
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  if (!is.read(magic.data(), 4) || magic != kEventMagic)
    throw FormatError(source + ": not an event dump (bad magic)");
  if (!binary::read_le(is, version) || version != kEventVersion)
    throw FormatError(source + ": unsupported event dump version");
  if (!binary::read_le(is, count)) throw FormatError(source + ": truncated header");
  std::vector<DepositionEvent> events;
  events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    DepositionEvent ev;
    std::uint8_t ch = 0;
    if (!binary::read_le(is, ev.x) || !binary::read_le(is, ev.y) || !binary::read_le(is, ev.z) ||
        !binary::read_le(is, ev.energy_ev) || !binary::read_le(is, ch))
      throw FormatError(source + ": truncated at record " + std::to_string(i) + " of " +
                        std::to_string(count));
    if (ch > 1) throw FormatError(source + ": bad channel in record " + std::to_string(i));
    ev.channel = static_cast<Channel>(ch);
    events.push_back(ev);
  }
  return events;
}

inline void write_event_dump(const std::string& path, std::span<const DepositionEvent> events) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  write_event_dump(os, events);
  if (!os) throw IoError("write failed: " + path);
}

inline std::vector<DepositionEvent> read_event_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_event_dump(is, path);
}

// Summary text: '#' comment lines, then "key = value" lines.
inline void write_summary(std::ostream& os, const DepositionRecord& record,
                          const std::vector<std::string>& header = {}) {
  const auto& s = record.summary;
  for (const auto& h : header) os << "# " << h << '\n';
  auto f = text::format_double;
  os << "trajectories = " << s.trajectories << '\n';
  os << "beam_energy_ev = " << f(s.beam_energy_ev) << '\n';
  os << "deposited_ev = " << f(s.deposited_ev) << '\n';
  os << "deposited_incident_ev = " << f(s.deposited_incident_ev) << '\n';
  os << "deposited_backscattered_ev = " << f(s.deposited_backscattered_ev) << '\n';
  os << "exited_ev = " << f(s.exited_ev) << '\n';
  os << "residual_ev = " << f(s.residual_ev) << '\n';
  os << "absorbed_deep_ev = " << f(s.absorbed_deep_ev) << '\n';
  os << "backscattered = " << s.backscattered << '\n';
  os << "backscatter_yield = " << f(s.backscatter_yield()) << '\n';
  os << "energy_balance_error = " << f(s.energy_balance_error()) << '\n';
  os << "events = " << record.events.size() << '\n';
  os << "layer_boundaries_nm =";
  for (double z : record.layer_boundaries_nm) os << ' ' << f(z);
  os << '\n';
  os << "deposited_by_region_ev =";
  for (double e : s.deposited_by_region) os << ' ' << f(e);
  os << '\n';
}

struct SummaryFile {
  TransportSummary summary;
  std::vector<double> layer_boundaries_nm;
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> meta;  // "# key = value" comment lines
};

inline SummaryFile read_summary(std::istream& is, const std::string& source = "summary") {
  SummaryFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(t.substr(1));
      if (const auto eq = body.find('='); eq != std::string_view::npos)
        out.meta[std::string(text::trim(body.substr(0, eq)))] =
            std::string(text::trim(body.substr(eq + 1)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw FormatError(source, lineno, 1, "expected key = value");
    out.values[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
  }
  auto number = [&](const char* key) {
    const auto it = out.values.find(key);
    double v = 0.0;
    if (it == out.values.end() || !text::parse_double(it->second, v))
      throw FormatError(source + ": missing or invalid '" + key + "'");
    return v;
  };
  auto list = [&](const char* key) {
    std::vector<double> v;
    const auto it = out.values.find(key);
    if (it == out.values.end()) throw FormatError(source + ": missing '" + key + "'");
    for (const auto& tok : text::tokenize(it->second)) {
      double d = 0.0;
      if (!text::parse_double(tok.text, d))
        throw FormatError(source + ": bad number in '" + key + "'");
      v.push_back(d);
    }
    return v;
  };
  auto& s = out.summary;
  s.trajectories = static_cast<std::uint64_t>(number("trajectories"));
  s.beam_energy_ev = number("beam_energy_ev");
  s.deposited_ev = number("deposited_ev");
  s.deposited_incident_ev = number("deposited_incident_ev");
  s.deposited_backscattered_ev = number("deposited_backscattered_ev");
  s.exited_ev = number("exited_ev");
  s.residual_ev = number("residual_ev");
  s.absorbed_deep_ev = number("absorbed_deep_ev");
  s.backscattered = static_cast<std::uint64_t>(number("backscattered"));
  s.deposited_by_region = list("deposited_by_region_ev");
  out.layer_boundaries_nm = list("layer_boundaries_nm");
  return out;
}

inline void write_exits_csv(std::ostream& os, std::span<const BackscatterExit> exits,
                            const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "theta_deg,energy_ev,radius_nm\n";
  for (const auto& ex : exits)
    os << text::format_double(ex.theta_deg) << ',' << text::format_double(ex.energy_ev) << ','
       << text::format_double(ex.radius_nm) << '\n';
}

inline std::vector<BackscatterExit> read_exits_csv(std::istream& is,
                                                   const std::string& source = "exits") {
  std::vector<BackscatterExit> exits;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (t != "theta_deg,energy_ev,radius_nm")
        throw FormatError(source, lineno, 1, "unexpected header");
      continue;
    }
    BackscatterExit ex;
    double* fields[] = {&ex.theta_deg, &ex.energy_ev, &ex.radius_nm};
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto comma = k < 2 ? t.find(',', start) : t.size();
      if (comma == std::string_view::npos ||
          !text::parse_double(t.substr(start, comma - start), *fields[k]))
        throw FormatError(source, lineno, start + 1, "bad exit record");
      start = comma + 1;
    }
    exits.push_back(ex);
  }
  return exits;
}

}  // namespace ebl
