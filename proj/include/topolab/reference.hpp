#pragma once

// Reference (limit-equation) side of the coupling: the spatial mass function
// M_rho of the kinetic solution and draws from the velocity law
//   g_i(u) ~ int K(M_rho(B_{|y_i - y|}(y_i))) f(y, u) dy.

#include "topolab/initial_law.hpp"
#include "topolab/kernel.hpp"
#include "topolab/kinetic.hpp"
#include "topolab/rng.hpp"

#include <memory>
#include <span>
#include <vector>

namespace topolab {

class Reference {
 public:
  virtual ~Reference() = default;

  virtual int dim() const = 0;
  /// Earliest and latest time at which the reference is available.
  virtual double start_time() const = 0;
  virtual double end_time() const = 0;
  /// M_rho(t)(B_radius(center)).
  virtual double ball_mass(double t, std::span<const double> center, double radius) const = 0;
  /// Draws a velocity from g_i(.) at time t for a particle at `origin`.
  virtual void sample_velocity(double t, std::span<const double> origin, const Kernel& kernel, Rng& rng,
                               std::span<double> out) const = 0;
  /// Phase-space density at time t on a grid compatible with `bins`
  /// (d = 1 only).
  virtual GridDensity grid_density(double t, const GridSpec& bins) const = 0;
};

/// Reference built from stored kinetic snapshots (d = 1). Masses and
/// densities are linearly interpolated in time between neighbouring
/// snapshots. Velocity draws return v-grid cell centres.
class KineticReference final : public Reference {
 public:
  /// Snapshots must share one grid and be sorted by strictly increasing time.
  explicit KineticReference(std::vector<GridDensity> snapshots);

  int dim() const override { return 1; }
  double start_time() const override { return snapshots_.front().time(); }
  double end_time() const override { return snapshots_.back().time(); }
  double ball_mass(double t, std::span<const double> center, double radius) const override;
  void sample_velocity(double t, std::span<const double> origin, const Kernel& kernel, Rng& rng,
                       std::span<double> out) const override;

  /// Time-interpolated density on the grid.
  GridDensity density_at(double t) const;
  GridDensity grid_density(double t, const GridSpec&) const override { return density_at(t); }
  const std::vector<GridDensity>& snapshots() const { return snapshots_; }

 private:
  struct Bracket {
    std::size_t lo;
    std::size_t hi;
    double weight;  // of hi
  };
  Bracket bracket(double t) const;

  std::vector<GridDensity> snapshots_;
  std::vector<MassFunction> masses_;
};

/// Exact reference for a spatially uniform density on the d-torus with an
/// x-independent velocity law: such states are stationary, M_rho(B_r) is the
/// volume of the ball on the torus and g_i = g_0.
class HomogeneousReference final : public Reference {
 public:
  HomogeneousReference(int dim, VelocityLaw velocity, double horizon);

  int dim() const override { return dim_; }
  double start_time() const override { return 0.0; }
  double end_time() const override { return horizon_; }
  double ball_mass(double t, std::span<const double> center, double radius) const override;
  void sample_velocity(double t, std::span<const double> origin, const Kernel& kernel, Rng& rng,
                       std::span<double> out) const override;
  GridDensity grid_density(double t, const GridSpec& bins) const override;

 private:
  int dim_;
  VelocityLaw velocity_;
  double horizon_;
};

/// Volume of {y in [-1/2, 1/2)^d : |y| <= r} for d in {1, 2}.
double torus_ball_volume(int dim, double radius);

}  // namespace topolab
