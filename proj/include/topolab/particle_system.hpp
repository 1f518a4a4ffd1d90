#pragma once

#include "topolab/configuration.hpp"
#include "topolab/kernel.hpp"
#include "topolab/rng.hpp"
#include "topolab/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace topolab {

/// Particles under free transport with piecewise-constant velocities.
///
/// Each particle keeps an anchor (x0, t0) and its current velocity; its
/// position at time t is x0 + v (t - t0) mod 1. Anchors move only when a
/// velocity changes, so two copies that receive the same velocity updates
/// at the same times hold bitwise-equal positions.
class FreeStream {
 public:
  FreeStream() = default;
  FreeStream(const Configuration& initial, bool frozen);

  std::size_t size() const { return t0_.size(); }
  int dim() const { return dim_; }

  double coordinate(std::size_t i, int k, double t) const;
  void position(std::size_t i, double t, std::span<double> out) const;
  /// All positions at time t, particle-major, into `out` (resized).
  void positions(double t, std::vector<double>& out) const;
  std::span<const double> velocity(std::size_t i) const {
    return {velocity_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  /// Re-anchors particle i at time t and gives it velocity v.
  void set_velocity(std::size_t i, double t, std::span<const double> v);

  Configuration snapshot(double t) const;

 private:
  int dim_ = 1;
  bool frozen_ = false;
  std::vector<double> anchor_;
  std::vector<double> t0_;
  std::vector<double> velocity_;
};

struct ProcessParams {
  Kernel kernel = Kernel::uniform();
  std::size_t n = 2;
  int dim = 1;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  /// Skip transport so ranks stay constant (test mode for the master
  /// equation comparison).
  bool frozen_positions = false;
  /// Times at which to store the state; each must lie in [0, horizon].
  std::vector<double> snapshot_times;
};

struct JumpEvent {
  double time;
  std::size_t focal;
  std::size_t partner;
  /// R(focal, partner) at the event.
  std::size_t rank;
};

struct Snapshot {
  double time;
  Configuration state;
};

struct Trajectory {
  std::vector<JumpEvent> events;
  std::vector<Snapshot> snapshots;
  Configuration final_state;
};

/// Exact event-driven realization of the N-particle jump process on
/// [0, horizon]: a rate-N exponential clock; at each ring a focal i chosen
/// uniformly and a partner j drawn from pi_{i,.} on the transported
/// positions; then v_i <- v_j.
Trajectory simulate(const ProcessParams& params, const Configuration& initial);
Trajectory simulate(const ProcessParams& params, const Configuration& initial, Rng& rng);

void write_events_csv(std::ostream& out, const Trajectory& trajectory);
void write_snapshots_csv(std::ostream& out, const Trajectory& trajectory);

/// Exact law of the velocity labels at time t for a frozen configuration.
///
/// State s encodes the labels (l_0, ..., l_{n-1}) in base |alphabet| with
/// l_0 as the most significant digit. Velocities of `frozen` must all lie in
/// `alphabet`. Refuses (ValidationError) state spaces with n > 4 or more
/// than 4 labels.
std::vector<double> master_equation_law(const Kernel& kernel, const Configuration& frozen,
                                        std::span<const double> alphabet, double t);

/// State index of `config`'s velocities in the encoding above.
std::size_t label_state(const Configuration& config, std::span<const double> alphabet);

/// Binning for (x, v) histograms on [0,1) x [-v_max, v_max).
struct HistogramSpec {
  std::size_t nbx = 16;
  std::size_t nbv = 8;
  double v_max = 1.0;
};

/// Normalized histogram of all particles (d = 1), row-major [x][v].
/// Velocities outside the range go to the edge bins.
std::vector<double> empirical_marginal(const Configuration& state, const HistogramSpec& spec);
std::vector<double> empirical_marginal(const Trajectory& trajectory, double t, const HistogramSpec& spec);

}  // namespace topolab
