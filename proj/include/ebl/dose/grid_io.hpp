#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ebl/common/binary.hpp"
#include "ebl/common/error.hpp"
#include "ebl/common/grid.hpp"
#include "ebl/psf/kernel.hpp"

namespace ebl {

// Binary grid: 24-byte little-endian header (magic "EBLG", uint32 version,
// float64 pitch [nm], uint32 width, uint32 height) followed by width*height
// float32 values in row-major order (x fastest).
inline constexpr std::array<char, 4> kGridMagic{'E', 'B', 'L', 'G'};
inline constexpr std::uint32_t kGridVersion = 1;

inline void write_grid(std::ostream& os, const Grid2D& g) {
  require(g.width <= UINT32_MAX && g.height <= UINT32_MAX, "grid", "too large for the format");
  os.write(kGridMagic.data(), 4);
  binary::write_le<std::uint32_t>(os, kGridVersion);
  binary::write_le<double>(os, g.pitch);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.width));
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.height));
  for (double v : g.values) binary::write_le<float>(os, static_cast<float>(v));
}

inline Grid2D read_grid(std::istream& is, const std::string& source = "grid") {
  std::array<char, 4> magic{};
  std::uint32_t version = 0, w = 0, h = 0;
  double pitch = 0.0;
  if (!is.read(magic.data(), 4) || magic != kGridMagic)
    throw FormatError(source + ": not a grid file (bad magic)");
  if (!binary::read_le(is, version) || version != kGridVersion)
    throw FormatError(source + ": unsupported grid version");
  if (!binary::read_le(is, pitch) || !binary::read_le(is, w) || !binary::read_le(is, h))
    throw FormatError(source + ": truncated header");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw FormatError(source + ": invalid pitch");
  Grid2D g(w, h, pitch);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    float v = 0.0f;
    if (!binary::read_le(is, v))
      throw FormatError(source + ": truncated at value " + std::to_string(i) + " of " +
                        std::to_string(g.values.size()));
    g.values[i] = v;
  }
  return g;
}

inline void save_grid(const std::string& path, const Grid2D& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  write_grid(os, g);
  if (!os) throw IoError("write failed: " + path);
}

inline Grid2D load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_grid(is, path);
}

// Kernel channel as a grid, centre cell at (n, n).
inline Grid2D kernel_grid(const PsfKernel& k, Channel c) {
  const auto s = static_cast<std::size_t>(k.size());
  Grid2D g(s, s, k.pitch());
  g.values = k.samples(c);
  return g;
}

inline Grid2D kernel_total_grid(const PsfKernel& k) {
  Grid2D g = kernel_grid(k, Channel::incident);
  g += kernel_grid(k, Channel::backscattered);
  return g;
}

// 8-bit binary portable graymap scaled to [0, max]; row 0 is the top of the
// image (largest y).
inline void write_pgm(std::ostream& os, const Grid2D& g, const std::vector<std::string>& comments = {}) {
  const double top = g.max();
  os << "P5\n";
  for (const auto& c : comments) os << "# " << c << '\n';
  os << g.width << ' ' << g.height << "\n255\n";
  std::vector<unsigned char> row(g.width);
  for (std::size_t r = 0; r < g.height; ++r) {
    const std::size_t j = g.height - 1 - r;
    for (std::size_t i = 0; i < g.width; ++i) {
      const double v = top > 0.0 ? std::clamp(g(i, j) / top, 0.0, 1.0) : 0.0;
      row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

inline void save_pgm(const std::string& path, const Grid2D& g, const std::vector<std::string>& comments = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  write_pgm(os, g, comments);
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace ebl
