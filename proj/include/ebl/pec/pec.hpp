#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/common/text.hpp"
#include "ebl/dose/convolve.hpp"
#include "ebl/layout/rasterize.hpp"

namespace ebl {

struct PecOptions {
  double target = 0.0;     // uC/cm^2 of deposited total dose
  double tolerance = 0.01; // relative
  int max_iterations = 25;
  double min_factor = 0.5;
  double max_factor = 8.0;
  int divergence_window = 5;  // consecutive residual increases treated as divergence

  void validate() const {
    require(target > 0.0 && std::isfinite(target), "pec.target", "must be positive");
    require(tolerance > 0.0, "pec.tolerance", "must be positive");
    require(max_iterations >= 1, "pec.max_iterations", "must be at least 1");
    require(min_factor > 0.0 && min_factor < max_factor, "pec.clamp",
            "need 0 < min factor < max factor");
    require(divergence_window >= 1, "pec.divergence_window", "must be at least 1");
  }
};

struct PecIteration {
  int iteration = 0;
  double residual = 0.0;
  std::vector<double> factors;     // factors used for this evaluation
  std::vector<double> shape_means; // resulting mean total dose per shape
};

struct PecResult {
  PatternLayout layout;  // same polygons, corrected dose factors
  double residual = 0.0; // max relative deviation of a shape mean from the target
  int iterations = 0;
  bool converged = false;
  std::vector<PecIteration> log;
  std::vector<std::string> warnings;
};

namespace detail {

struct SparseCoverage {
  std::vector<std::size_t> cells;
  std::vector<double> weights;
  double area = 0.0;  // in cells
};

inline std::vector<SparseCoverage> sparse_coverages(const PatternLayout& layout, double pitch) {
  std::vector<SparseCoverage> out;
  for (std::size_t s = 0; s < layout.shapes.size(); ++s) {
    const Grid2D g = shape_coverage(layout, s, pitch);
    SparseCoverage c;
    for (std::size_t q = 0; q < g.values.size(); ++q) {
      if (g.values[q] > 0.0) {
        c.cells.push_back(q);
        c.weights.push_back(g.values[q]);
        c.area += g.values[q];
      }
    }
    if (!(c.area > 0.0))
      throw GeometryError(layout.shapes[s].tag, "shape covers no area on the " +
                                                    text::format_double(pitch) + " nm grid");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

// Mean of `field` over a shape, weighted by its cell coverage.
inline double shape_mean(const Grid2D& field, const std::vector<std::size_t>& cells,
                         const std::vector<double>& weights) {
  double acc = 0.0, area = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    acc += field.values[cells[k]] * weights[k];
    area += weights[k];
  }
  return acc / area;
}

// Fixed-point shape-mean correction: each shape's factor is multiplied by
// target / (its mean simulated total dose) until every mean is within
// tolerance. The bridge gap is not a control target.
inline PecResult correct(const PatternLayout& layout, const PsfKernel& kernel, const PecOptions& opt) {
  opt.validate();
  layout.validate();
  require(!layout.shapes.empty(), "layout.shapes", "nothing to correct");
  const double pitch = kernel.pitch();
  const auto cover = detail::sparse_coverages(layout, pitch);
  Grid2D exposure = empty_grid(layout, pitch);
  FftConvolver conv(exposure.width, exposure.height, kernel);

  PecResult result;
  result.layout = layout;
  std::vector<double> factors;
  for (const auto& s : layout.shapes) factors.push_back(s.dose_factor);

  int growth = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    std::fill(exposure.values.begin(), exposure.values.end(), 0.0);
    for (std::size_t s = 0; s < cover.size(); ++s) {
      const double applied = layout.base_dose * factors[s];
      for (std::size_t k = 0; k < cover[s].cells.size(); ++k)
        exposure.values[cover[s].cells[k]] += applied * cover[s].weights[k];
    }
    const DoseGrid dose = conv.apply(exposure);

    PecIteration step;
    step.iteration = it;
    step.factors = factors;
    for (std::size_t s = 0; s < cover.size(); ++s) {
      const double mean = shape_mean(dose.total, cover[s].cells, cover[s].weights);
      if (!(mean > 0.0))
        throw NumericError("pec: shape '" + layout.shapes[s].tag + "' receives no simulated dose");
      step.shape_means.push_back(mean);
      step.residual = std::max(step.residual, std::abs(mean - opt.target) / opt.target);
    }
    if (!result.log.empty() && step.residual > result.log.back().residual) ++growth;
    else growth = 0;
    result.log.push_back(step);
    result.iterations = it;
    result.residual = step.residual;
    for (std::size_t s = 0; s < factors.size(); ++s) result.layout.shapes[s].dose_factor = factors[s];

    if (step.residual <= opt.tolerance) {
      result.converged = true;
      break;
    }
    if (growth >= opt.divergence_window) {
      std::ostringstream msg;
      msg << "pec diverged: residual grew for " << growth << " consecutive iterations (";
      for (std::size_t k = 0; k < result.log.size(); ++k)
        msg << (k ? ", " : "") << text::format_double(result.log[k].residual);
      msg << ")";
      throw NumericError(msg.str());
    }
    if (it == opt.max_iterations) break;
    for (std::size_t s = 0; s < factors.size(); ++s) {
      const double next = factors[s] * opt.target / step.shape_means[s];
      const double clamped = std::clamp(next, opt.min_factor, opt.max_factor);
      if (clamped != next)
        result.warnings.push_back("iteration " + std::to_string(it) + ": factor of shape '" +
                                  layout.shapes[s].tag + "' clamped from " +
                                  text::format_double(next) + " to " +
                                  text::format_double(clamped));
      factors[s] = clamped;
    }
  }
  return result;
}

// Iteration log: iteration, residual, then one factor column per shape.
inline void write_pec_log(std::ostream& os, const PecResult& r,
                          const std::vector<std::string>& header = {}) {
  for (const auto& h : header) os << "# " << h << '\n';
  os << "iteration,residual";
  for (std::size_t s = 0; s < r.layout.shapes.size(); ++s)
    os << ",factor_" << s << '_' << r.layout.shapes[s].tag;
  os << '\n';
  for (const auto& step : r.log) {
    os << step.iteration << ',' << text::format_double(step.residual);
    for (double f : step.factors) os << ',' << text::format_double(f);
    os << '\n';
  }
}

}  // namespace ebl
