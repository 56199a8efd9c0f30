#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ebl/common/parallel.hpp"
#include "ebl/common/rng.hpp"
#include "ebl/transport/physics.hpp"
#include "ebl/transport/stack.hpp"

namespace ebl {

enum class Channel : std::uint8_t { incident = 0, backscattered = 1 };

struct DepositionEvent {
  float x = 0, y = 0, z = 0;  // nm
  float energy_ev = 0;
  Channel channel = Channel::incident;
};

struct BackscatterExit {
  double theta_deg = 0.0;  // from the surface normal
  double energy_ev = 0.0;
  double radius_nm = 0.0;  // exit point distance from the beam axis
};

struct TransportSummary {
  std::uint64_t trajectories = 0;
  double beam_energy_ev = 0.0;
  double deposited_ev = 0.0;
  double deposited_incident_ev = 0.0;
  double deposited_backscattered_ev = 0.0;
  double exited_ev = 0.0;
  double residual_ev = 0.0;        // energy left when tracking stopped at the cutoff
  double absorbed_deep_ev = 0.0;   // carried past the maximum tracking depth
  std::uint64_t backscattered = 0; // electrons leaving through the top surface
  std::vector<double> deposited_by_region;  // layers top-first, then substrate

  double backscatter_yield() const {
    return trajectories ? static_cast<double>(backscattered) / static_cast<double>(trajectories)
                        : 0.0;
  }

  double incoming_ev() const { return static_cast<double>(trajectories) * beam_energy_ev; }

  // |incoming - (deposited + exited + residual + deep)| / incoming
  double energy_balance_error() const {
    const double in = incoming_ev();
    if (in == 0.0) return 0.0;
    return std::abs(in - (deposited_ev + exited_ev + residual_ev + absorbed_deep_ev)) / in;
  }

  void merge(const TransportSummary& other) {
    trajectories += other.trajectories;
    deposited_ev += other.deposited_ev;
    deposited_incident_ev += other.deposited_incident_ev;
    deposited_backscattered_ev += other.deposited_backscattered_ev;
    exited_ev += other.exited_ev;
    residual_ev += other.residual_ev;
    absorbed_deep_ev += other.absorbed_deep_ev;
    backscattered += other.backscattered;
    if (deposited_by_region.size() < other.deposited_by_region.size())
      deposited_by_region.resize(other.deposited_by_region.size(), 0.0);
    for (std::size_t i = 0; i < other.deposited_by_region.size(); ++i)
      deposited_by_region[i] += other.deposited_by_region[i];
  }
};

struct TransportOptions {
  unsigned threads = 0;            // 0: hardware concurrency
  std::uint64_t chunk_size = 256;  // trajectories per RNG stream
  double max_depth_nm = 50000.0;
  double max_deposit_segment_nm = 20.0;
  bool record_substrate_events = false;
};

// Once an electron travels back toward the surface it stays backscattered.
class BackscatterClassifier {
 public:
  Channel observe(double direction_z) noexcept {
    if (direction_z < 0.0) channel_ = Channel::backscattered;
    return channel_;
  }
  Channel channel() const noexcept { return channel_; }

 private:
  Channel channel_ = Channel::incident;
};

// Channel of each straight segment of a trajectory given the z direction
// cosine it was travelled with.
inline std::vector<Channel> classify_backscatter(std::span<const double> segment_direction_z) {
  std::vector<Channel> out;
  out.reserve(segment_direction_z.size());
  BackscatterClassifier cls;
  for (double w : segment_direction_z) out.push_back(cls.observe(w));
  return out;
}

template <class T>
concept TransportTally = std::copy_constructible<T> &&
    requires(T t, T other, const DepositionEvent& ev, const BackscatterExit& ex, int region) {
      t.deposit(ev, region);
      t.exit(ex);
      t.merge(std::move(other));
    };

template <class Tally>
struct TransportResult {
  TransportSummary summary;
  Tally tally;
};

namespace detail {

inline void rotate_direction(double& u, double& v, double& w, double cos_theta,
                             double azimuth) noexcept {
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const double cp = std::cos(azimuth);
  const double sp = std::sin(azimuth);
  if (std::abs(w) > 0.99999) {
    u = sin_theta * cp;
    v = sin_theta * sp;
    w = std::copysign(cos_theta, w);
    return;
  }
  const double t = std::sqrt(1.0 - w * w);
  const double nu = sin_theta * (u * w * cp - v * sp) / t + u * cos_theta;
  const double nv = sin_theta * (v * w * cp + u * sp) / t + v * cos_theta;
  const double nw = -sin_theta * cp * t + w * cos_theta;
  const double norm = 1.0 / std::sqrt(nu * nu + nv * nv + nw * nw);
  u = nu * norm;
  v = nv * norm;
  w = nw * norm;
}

template <class Tally>
class TrajectoryRunner {
 public:
  TrajectoryRunner(const LayerStack& stack, const BeamConfig& beam, const TransportOptions& opts,
                   TransportSummary& summary, Tally& tally)
      : beam_(beam), opts_(opts), summary_(summary), tally_(tally) {
    boundaries_ = stack.boundaries_nm();
    layer_count_ = static_cast<int>(stack.layers().size());
    for (const auto& l : stack.layers()) tables_.emplace_back(l.material);
    tables_.emplace_back(stack.substrate());
    summary_.deposited_by_region.assign(tables_.size(), 0.0);
  }

  void run(Rng& rng) {
    double x = 0.0, y = 0.0;
    if (beam_.radius_nm > 0.0) {
      rng.normal_pair(x, y);
      x *= beam_.radius_nm;
      y *= beam_.radius_nm;
    }
    double z = 0.0, u = 0.0, v = 0.0, w = 1.0;
    double energy = beam_.energy_kev * 1e3;  // eV
    int region = 0;
    BackscatterClassifier cls;
    summary_.trajectories += 1;

    for (;;) {
      if (energy <= beam_.cutoff_ev) {
        summary_.residual_ev += energy;
        return;
      }
      auto& table = tables_[static_cast<std::size_t>(region)];
      const double energy_kev = energy * 1e-3;
      const auto sample = table.sample(energy_kev, rng);

      const double top = boundaries_[static_cast<std::size_t>(std::min(region, layer_count_))];
      const double bottom = region < layer_count_
                                ? boundaries_[static_cast<std::size_t>(region) + 1]
                                : opts_.max_depth_nm;
      double to_boundary = std::numeric_limits<double>::infinity();
      if (w > 0.0) to_boundary = (bottom - z) / w;
      else if (w < 0.0) to_boundary = (top - z) / w;
      const bool crosses = sample.free_path_nm >= to_boundary;
      const double step = crosses ? to_boundary : sample.free_path_nm;

      const double loss = continuous_energy_loss(table.material(), energy_kev, step);
      deposit_segment(x, y, z, u, v, w, step, loss, cls.channel(), region, rng);
      energy = std::max(0.0, energy - loss);
      x += u * step;
      y += v * step;
      z += w * step;

      if (crosses) {
        if (w < 0.0) {
          if (region == 0) {
            leave_surface(x, y, w, energy);
            return;
          }
          --region;
          z = top;
        } else {
          if (region == layer_count_) {
            summary_.absorbed_deep_ev += energy;
            return;
          }
          ++region;
          z = bottom;
        }
        continue;
      }
      if (energy <= beam_.cutoff_ev) continue;

      rotate_direction(u, v, w, sample.cos_theta, 2.0 * std::numbers::pi * rng.uniform());
      cls.observe(w);
    }
  }

 private:
  void leave_surface(double x, double y, double w, double energy) {
    if (energy <= beam_.cutoff_ev) {
      summary_.residual_ev += energy;
      return;
    }
    summary_.exited_ev += energy;
    summary_.backscattered += 1;
    BackscatterExit ex;
    ex.theta_deg = std::acos(std::clamp(-w, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    ex.energy_ev = energy;
    ex.radius_nm = std::hypot(x, y);
    tally_.exit(ex);
  }

  void deposit_segment(double x, double y, double z, double u, double v, double w, double step,
                       double loss, Channel channel, int region, Rng& rng) {
    if (loss <= 0.0) return;
    summary_.deposited_ev += loss;
    (channel == Channel::incident ? summary_.deposited_incident_ev
                                  : summary_.deposited_backscattered_ev) += loss;
    summary_.deposited_by_region[static_cast<std::size_t>(region)] += loss;
    if (region >= layer_count_ && !opts_.record_substrate_events) return;

    const auto pieces = static_cast<int>(
        std::max(1.0, std::ceil(step / opts_.max_deposit_segment_nm)));
    const double share = loss / pieces;
    for (int k = 0; k < pieces; ++k) {
      const double t = step * (k + rng.uniform()) / pieces;
      DepositionEvent ev;
      ev.x = static_cast<float>(x + u * t);
      ev.y = static_cast<float>(y + v * t);
      ev.z = static_cast<float>(z + w * t);
      ev.energy_ev = static_cast<float>(share);
      ev.channel = channel;
      if (ev.energy_ev > 0.0f) tally_.deposit(ev, region);
    }
  }

  const BeamConfig& beam_;
  const TransportOptions& opts_;
  TransportSummary& summary_;
  Tally& tally_;
  std::vector<double> boundaries_;
  std::vector<ScatteringTable> tables_;
  int layer_count_ = 0;
};

}  // namespace detail

// Runs beam.trajectories independent electron histories. Trajectories are
// split into fixed chunks with their own RNG stream and reduced in chunk
// order, so the result is bit-identical for any thread count.
template <TransportTally Tally>
TransportResult<Tally> transport(const LayerStack& stack, const BeamConfig& beam,
                                 const TransportOptions& opts, const Tally& prototype) {
  stack.validate();
  beam.validate();
  require(opts.chunk_size >= 1, "options.chunk_size", "must be at least 1");
  require(opts.max_depth_nm > stack.total_thickness_nm(), "options.max_depth_nm",
          "must lie below the resist stack");
  require(opts.max_deposit_segment_nm > 0.0, "options.max_deposit_segment_nm",
          "must be positive");

  const std::uint64_t chunks = (beam.trajectories + opts.chunk_size - 1) / opts.chunk_size;
  std::vector<std::optional<TransportResult<Tally>>> partial(chunks);

  parallel_for(chunks, opts.threads, [&](std::size_t c) {
    TransportResult<Tally> local{TransportSummary{}, prototype};
    local.summary.beam_energy_ev = beam.energy_kev * 1e3;
    detail::TrajectoryRunner<Tally> runner(stack, beam, opts, local.summary, local.tally);
    Rng rng(beam.seed, c);
    const std::uint64_t begin = c * opts.chunk_size;
    const std::uint64_t end = std::min(beam.trajectories, begin + opts.chunk_size);
    for (std::uint64_t t = begin; t < end; ++t) runner.run(rng);
    partial[c] = std::move(local);
  });

  TransportResult<Tally> result{TransportSummary{}, prototype};
  result.summary.beam_energy_ev = beam.energy_kev * 1e3;
  result.summary.deposited_by_region.assign(stack.layers().size() + 1, 0.0);
  for (auto& p : partial) {
    result.summary.merge(p->summary);
    result.tally.merge(std::move(p->tally));
  }
  return result;
}

// Collects every recorded event and exit.
struct EventTally {
  std::vector<DepositionEvent> events;
  std::vector<BackscatterExit> exits;

  void deposit(const DepositionEvent& ev, int) { events.push_back(ev); }
  void exit(const BackscatterExit& ex) { exits.push_back(ex); }
  void merge(EventTally&& other) {
    events.insert(events.end(), other.events.begin(), other.events.end());
    exits.insert(exits.end(), other.exits.begin(), other.exits.end());
  }
};

struct DepositionRecord {
  std::vector<DepositionEvent> events;
  std::vector<BackscatterExit> exits;
  TransportSummary summary;
  std::vector<double> layer_boundaries_nm;  // 0, ..., resist bottom
};

inline DepositionRecord simulate(const LayerStack& stack, const BeamConfig& beam,
                                 const TransportOptions& opts = {}) {
  auto result = transport(stack, beam, opts, EventTally{});
  DepositionRecord record;
  record.events = std::move(result.tally.events);
  record.exits = std::move(result.tally.exits);
  record.summary = std::move(result.summary);
  record.layer_boundaries_nm = stack.boundaries_nm();
  return record;
}

}  // namespace ebl
