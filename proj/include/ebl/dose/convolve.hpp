#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/grid.hpp"
#include "ebl/common/parallel.hpp"
#include "ebl/psf/kernel.hpp"

namespace ebl {

// Deposited dose per channel, in the units of the applied dose.
struct DoseGrid {
  Grid2D total;
  Grid2D incident;
  Grid2D backscattered;

  double pitch() const noexcept { return total.pitch; }
  const Grid2D& channel(Channel c) const { return c == Channel::incident ? incident : backscattered; }

  DoseGrid& operator*=(double k) {
    total *= k;
    incident *= k;
    backscattered *= k;
    return *this;
  }
};

namespace detail {

inline void check_pitch(const Grid2D& exposure, const PsfKernel& kernel) {
  const double a = exposure.pitch, b = kernel.pitch();
  if (!(std::abs(a - b) <= 1e-9 * std::max(a, b)))
    throw ValidationError("kernel.pitch", "kernel pitch " + std::to_string(b) +
                                              " nm does not match grid pitch " +
                                              std::to_string(a) + " nm");
}

inline DoseGrid assemble(Grid2D incident, Grid2D backscattered) {
  DoseGrid d;
  d.total = Grid2D(incident.width, incident.height, incident.pitch);
  for (std::size_t i = 0; i < d.total.values.size(); ++i)
    d.total.values[i] = incident.values[i] + backscattered.values[i];
  d.incident = std::move(incident);
  d.backscattered = std::move(backscattered);
  return d;
}

}  // namespace detail

// Direct summation, dose(i, j) = sum E(i - dx, j - dy) * k(dx, dy), with
// zero exposure outside the grid. O(cells x kernel cells); the reference
// implementation.
inline DoseGrid convolve_direct(const Grid2D& exposure, const PsfKernel& kernel, unsigned threads = 0) {
  detail::check_pitch(exposure, kernel);
  const long w = static_cast<long>(exposure.width), h = static_cast<long>(exposure.height);
  const long n = kernel.radius_cells(), ks = kernel.size();

  auto run = [&](Channel c) {
    Grid2D out(exposure.width, exposure.height, exposure.pitch);
    const auto& k = kernel.samples(c);
    parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t jj) {
      const long j = static_cast<long>(jj);
      for (long i = 0; i < w; ++i) {
        double acc = 0.0;
        for (long dy = std::max(-n, j - h + 1); dy <= std::min(n, j); ++dy) {
          const double* erow = &exposure.values[static_cast<std::size_t>((j - dy) * w)];
          const double* krow = &k[static_cast<std::size_t>((dy + n) * ks + n)];
          for (long dx = std::max(-n, i - w + 1); dx <= std::min(n, i); ++dx)
            acc += erow[i - dx] * krow[dx];
        }
        out.values[static_cast<std::size_t>(j * w + i)] = acc;
      }
    });
    return out;
  };
  return detail::assemble(run(Channel::incident), run(Channel::backscattered));
}

// Direct total dose at selected cells (row-major indices), summing over the
// non-zero exposure cells only. Cheap for sparse layouts where a full
// direct convolution is not.
inline std::vector<double> direct_total_at(const Grid2D& exposure, const PsfKernel& kernel,
                                           std::span<const std::size_t> cells) {
  detail::check_pitch(exposure, kernel);
  const long w = static_cast<long>(exposure.width);
  const long n = kernel.radius_cells(), ks = kernel.size();
  struct Source {
    long i, j;
    double value;
  };
  std::vector<Source> sources;
  for (std::size_t q = 0; q < exposure.values.size(); ++q)
    if (exposure.values[q] != 0.0)
      sources.push_back({static_cast<long>(q) % w, static_cast<long>(q) / w, exposure.values[q]});

  const auto& inc = kernel.samples(Channel::incident);
  const auto& bs = kernel.samples(Channel::backscattered);
  std::vector<double> out;
  out.reserve(cells.size());
  for (std::size_t cell : cells) {
    require(cell < exposure.values.size(), "cells", "index outside the grid");
    const long i = static_cast<long>(cell) % w, j = static_cast<long>(cell) / w;
    double a = 0.0, b = 0.0;
    for (const auto& src : sources) {
      const long dx = i - src.i, dy = j - src.j;
      if (dx < -n || dx > n || dy < -n || dy > n) continue;
      const auto k = static_cast<std::size_t>((dy + n) * ks + (dx + n));
      a += src.value * inc[k];
      b += src.value * bs[k];
    }
    out.push_back(a + b);
  }
  return out;
}

namespace detail {

// FFTW's planner is not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

struct PlanFree {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanFree>;

// Smallest 2^a 3^b 5^c 7^d >= n.
inline std::size_t fft_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

}  // namespace detail

// Transform convolution for a fixed grid shape and kernel. The kernel spectra
// are computed once, so repeated applications (correction loops, sweeps)
// only pay for one forward and two inverse transforms. Zero padding makes
// the result equal to the direct sum up to rounding. Plans use
// FFTW_ESTIMATE, which is deterministic.
class FftConvolver {
 public:
  FftConvolver(std::size_t width, std::size_t height, const PsfKernel& kernel)
      : width_(width), height_(height), pitch_(kernel.pitch()), radius_(kernel.radius_cells()) {
    require(width > 0 && height > 0, "grid", "must not be empty");
    nx_ = detail::fft_size(width + static_cast<std::size_t>(radius_));
    ny_ = detail::fft_size(height + static_cast<std::size_t>(radius_));
    cx_ = nx_ / 2 + 1;
    real_ = detail::fftw_buffer<double>(nx_ * ny_);
    spec_ = detail::fftw_buffer<fftw_complex>(cx_ * ny_);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const int ny = static_cast<int>(ny_), nx = static_cast<int>(nx_);
      forward_.reset(fftw_plan_dft_r2c_2d(ny, nx, real_.get(), spec_.get(), FFTW_ESTIMATE));
      inverse_.reset(fftw_plan_dft_c2r_2d(ny, nx, spec_.get(), real_.get(), FFTW_ESTIMATE));
    }
    if (!forward_ || !inverse_) throw NumericError("FFTW could not create a plan");
    for (Channel c : {Channel::incident, Channel::backscattered}) {
      std::fill_n(real_.get(), nx_ * ny_, 0.0);
      const auto& k = kernel.samples(c);
      const long n = radius_, ks = kernel.size();
      for (long dy = -n; dy <= n; ++dy) {
        const std::size_t y = static_cast<std::size_t>((dy + static_cast<long>(ny_)) % static_cast<long>(ny_));
        for (long dx = -n; dx <= n; ++dx) {
          const std::size_t x = static_cast<std::size_t>((dx + static_cast<long>(nx_)) % static_cast<long>(nx_));
          real_[y * nx_ + x] = k[static_cast<std::size_t>((dy + n) * ks + (dx + n))];
        }
      }
      fftw_execute(forward_.get());
      auto& dst = kernel_spec_[static_cast<int>(c)];
      dst.assign(reinterpret_cast<std::complex<double>*>(spec_.get()),
                 reinterpret_cast<std::complex<double>*>(spec_.get()) + cx_ * ny_);
    }
  }

  FftConvolver(const Grid2D& like, const PsfKernel& kernel) : FftConvolver(like.width, like.height, kernel) {
    detail::check_pitch(like, kernel);
  }

  DoseGrid apply(const Grid2D& exposure) {
    require(exposure.width == width_ && exposure.height == height_, "grid",
            "shape differs from the one the convolver was planned for");
    if (!(std::abs(exposure.pitch - pitch_) <= 1e-9 * pitch_))
      throw ValidationError("kernel.pitch", "kernel pitch does not match grid pitch");

    std::fill_n(real_.get(), nx_ * ny_, 0.0);
    for (std::size_t j = 0; j < height_; ++j)
      std::copy_n(&exposure.values[j * width_], width_, &real_[j * nx_]);
    fftw_execute(forward_.get());
    const std::vector<std::complex<double>> image(
        reinterpret_cast<std::complex<double>*>(spec_.get()),
        reinterpret_cast<std::complex<double>*>(spec_.get()) + cx_ * ny_);

    const double scale = 1.0 / static_cast<double>(nx_ * ny_);
    auto run = [&](Channel c) {
      const auto& k = kernel_spec_[static_cast<int>(c)];
      auto* s = reinterpret_cast<std::complex<double>*>(spec_.get());
      for (std::size_t q = 0; q < image.size(); ++q) s[q] = image[q] * k[q];
      fftw_execute(inverse_.get());
      Grid2D out(width_, height_, exposure.pitch);
      for (std::size_t j = 0; j < height_; ++j)
        for (std::size_t i = 0; i < width_; ++i)
          out.values[j * width_ + i] = std::max(0.0, real_[j * nx_ + i] * scale);
      return out;
    };
    auto inc = run(Channel::incident);
    auto bs = run(Channel::backscattered);
    return detail::assemble(std::move(inc), std::move(bs));
  }

  std::size_t padded_width() const noexcept { return nx_; }
  std::size_t padded_height() const noexcept { return ny_; }

 private:
  std::size_t width_, height_;
  double pitch_;
  long radius_;
  std::size_t nx_ = 0, ny_ = 0, cx_ = 0;
  detail::FftwBuffer<double> real_;
  detail::FftwBuffer<fftw_complex> spec_;
  detail::Plan forward_, inverse_;
  std::array<std::vector<std::complex<double>>, 2> kernel_spec_;
};

inline DoseGrid convolve_fast(const Grid2D& exposure, const PsfKernel& kernel) {
  detail::check_pitch(exposure, kernel);
  FftConvolver conv(exposure.width, exposure.height, kernel);
  return conv.apply(exposure);
}

}  // namespace ebl
