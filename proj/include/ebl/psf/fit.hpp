#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "ebl/common/error.hpp"
#include "ebl/psf/radial_psf.hpp"

namespace ebl {

// density = a * r^-b, fitted in log-log space.
struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double r_squared = 0.0;
  double log_a_stderr = 0.0;
  double b_stderr = 0.0;
  std::size_t points = 0;

  double operator()(double r) const { return a * std::pow(r, -b); }

  // Relative drop of the fitted curve between two radii.
  double decay(double r_from, double r_to) const { return 1.0 - (*this)(r_to) / (*this)(r_from); }
};

inline PowerLawFit fit_power_law(std::span<const double> radius, std::span<const double> density,
                                 double r_min, double r_max) {
  require(r_min > 0.0 && r_min < r_max, "fit.range", "need 0 < r_min < r_max");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radius.size(); ++i) {
    if (radius[i] < r_min || radius[i] > r_max || !(density[i] > 0.0)) continue;
    xs.push_back(std::log(radius[i]));
    ys.push_back(std::log(density[i]));
  }
  if (xs.size() < 5)
    throw NumericError("power-law fit needs at least 5 positive bins in [" +
                       std::to_string(r_min) + ", " + std::to_string(r_max) + "] nm, got " +
                       std::to_string(xs.size()));

  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  PowerLawFit fit;
  fit.a = std::exp(intercept);
  fit.b = -slope;
  fit.r_min = r_min;
  fit.r_max = r_max;
  fit.points = xs.size();
  const double ss_res = std::max(0.0, syy - slope * sxy);
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  if (xs.size() > 2) {
    const double s2 = ss_res / (n - 2.0);
    fit.b_stderr = std::sqrt(s2 / sxx);
    fit.log_a_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return fit;
}

inline PowerLawFit fit_power_law(const RadialPSF& psf, Channel channel, double r_min,
                                 double r_max) {
  std::vector<double> centers(psf.bins());
  for (std::size_t k = 0; k < psf.bins(); ++k) centers[k] = psf.bin_center(k);
  return fit_power_law(centers, psf.channel(channel), r_min, r_max);
}

struct AngularFit {
  double mu_deg = 0.0;
  double sigma_deg = 0.0;
  double amplitude = 0.0;
  double mu_stderr = 0.0;
  double sigma_stderr = 0.0;
  std::vector<double> bin_centers_deg;
  std::vector<double> weights_ev;
};

// Energy-weighted histogram of exit angles over [0, 90] degrees with a
// Gaussian fitted by Levenberg-Marquardt.
inline AngularFit fit_angular(std::span<const BackscatterExit> exits, std::size_t bins = 45) {
  require(bins >= 3, "fit.angular_bins", "at least 3 bins required");
  if (exits.empty()) throw ValidationError("record.exits", "no backscattered exits to fit");

  const double width = 90.0 / static_cast<double>(bins);
  AngularFit fit;
  fit.bin_centers_deg.resize(bins);
  fit.weights_ev.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) fit.bin_centers_deg[k] = (k + 0.5) * width;
  double wsum = 0.0, wmean = 0.0;
  for (const auto& ex : exits) {
    const auto k = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(
                                                       std::max(0.0, ex.theta_deg) / width));
    fit.weights_ev[k] += ex.energy_ev;
    wsum += ex.energy_ev;
    wmean += ex.energy_ev * ex.theta_deg;
  }
  if (!(wsum > 0.0)) throw ValidationError("record.exits", "exits carry no energy");
  wmean /= wsum;
  double wvar = 0.0;
  for (const auto& ex : exits) wvar += ex.energy_ev * (ex.theta_deg - wmean) * (ex.theta_deg - wmean);
  wvar /= wsum;

  const auto& x = fit.bin_centers_deg;
  const auto& y = fit.weights_ev;
  const double sigma_floor = 0.5 * width;
  Eigen::Vector3d p(*std::max_element(y.begin(), y.end()), wmean,
                    std::max(std::sqrt(wvar), sigma_floor));

  auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r.resize(static_cast<Eigen::Index>(bins));
    if (jac) jac->resize(static_cast<Eigen::Index>(bins), 3);
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = (x[k] - q[1]) / q[2];
      const double g = std::exp(-0.5 * d * d);
      const auto i = static_cast<Eigen::Index>(k);
      r[i] = q[0] * g - y[k];
      if (jac) {
        (*jac)(i, 0) = g;
        (*jac)(i, 1) = q[0] * g * d / q[2];
        (*jac)(i, 2) = q[0] * g * d * d / q[2];
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(p, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * r;
    Eigen::Matrix3d damped = jtj;
    for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-300);
    Eigen::Vector3d trial = p - damped.ldlt().solve(grad);
    trial[1] = std::clamp(trial[1], 0.0, 90.0);
    trial[2] = std::max(trial[2], sigma_floor);
    Eigen::VectorXd r_trial;
    residuals(trial, r_trial, nullptr);
    const double trial_cost = r_trial.squaredNorm();
    if (trial_cost < cost) {
      const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
      p = trial;
      cost = trial_cost;
      residuals(p, r, &jac);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (improvement < 1e-14) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  fit.amplitude = p[0];
  fit.mu_deg = p[1];
  fit.sigma_deg = p[2];
  if (bins > 3) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const double s2 = cost / static_cast<double>(bins - 3);
    const Eigen::Matrix3d cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
    fit.mu_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.sigma_stderr = std::sqrt(std::max(0.0, cov(2, 2)));
  }
  return fit;
}

inline AngularFit fit_angular(const DepositionRecord& record, std::size_t bins = 45) {
  return fit_angular(std::span<const BackscatterExit>(record.exits), bins);
}

}  // namespace ebl
