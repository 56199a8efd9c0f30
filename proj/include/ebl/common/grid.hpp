#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ebl/common/error.hpp"

namespace ebl {

// Row-major 2D field. Cell (i, j) covers [i*pitch, (i+1)*pitch) x
// [j*pitch, (j+1)*pitch) in nm; i runs along x, j along y.
struct Grid2D {
  std::size_t width = 0;
  std::size_t height = 0;
  double pitch = 0.0;
  std::vector<double> values;

  Grid2D() = default;
  Grid2D(std::size_t w, std::size_t h, double p, double fill = 0.0)
      : width(w), height(h), pitch(p), values(w * h, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[j * width + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values[j * width + i]; }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

  bool same_shape(const Grid2D& o) const {
    return width == o.width && height == o.height && pitch == o.pitch;
  }

  Grid2D& operator*=(double k) {
    for (double& v : values) v *= k;
    return *this;
  }
  Grid2D& operator+=(const Grid2D& o) {
    require(same_shape(o), "grid", "shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
};

}  // namespace ebl
