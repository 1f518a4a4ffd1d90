#pragma once

// Grid solver for the limit kinetic equation on the 1-torus
//
//   (d/dt + v d/dx) f = -f + rho(x) int K(M_rho(B_{|x-y|}(x))) f(y, v) dy,
//
// with a bounded velocity grid. Time stepping is Strang splitting:
// semi-Lagrangian half-step transport, explicit Euler collision, half-step
// transport.

#include "topolab/initial_law.hpp"
#include "topolab/kernel.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace topolab {

struct GridSpec {
  std::size_t nx = 512;
  std::size_t nv = 64;
  double v_max = 1.0;
};

/// Cell averages f[x][v] on [0,1) x [-v_max, v_max], row-major by x.
class GridDensity {
 public:
  GridDensity() = default;
  GridDensity(GridSpec spec, double t);
  GridDensity(GridSpec spec, double t, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  std::size_t nx() const { return spec_.nx; }
  std::size_t nv() const { return spec_.nv; }
  double dx() const { return 1.0 / static_cast<double>(spec_.nx); }
  double dv() const { return 2.0 * spec_.v_max / static_cast<double>(spec_.nv); }
  double x_center(std::size_t ix) const { return (static_cast<double>(ix) + 0.5) * dx(); }
  double v_center(std::size_t iv) const { return -spec_.v_max + (static_cast<double>(iv) + 0.5) * dv(); }

  double time() const { return t_; }
  void set_time(double t) { t_ = t; }

  double& at(std::size_t ix, std::size_t iv) { return values_[ix * spec_.nv + iv]; }
  double at(std::size_t ix, std::size_t iv) const { return values_[ix * spec_.nv + iv]; }
  std::span<const double> row(std::size_t ix) const { return {values_.data() + ix * spec_.nv, spec_.nv}; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// sum f dx dv
  double total_mass() const;

 private:
  GridSpec spec_;
  double t_ = 0.0;
  std::vector<double> values_;
};

/// Bins rho_0 (x) g_0 onto the grid using exact cell integrals. Throws
/// ValidationError when g_0 has mass outside [-v_max, v_max).
GridDensity discretize(const InitialLaw& law, const GridSpec& spec);

/// rho[x] = sum_v f[x][v] dv
std::vector<double> density(const GridDensity& f);

/// Ball masses M_rho(B_r(x)) of a piecewise-constant density on the
/// 1-torus, from prefix sums. Exact for piecewise-constant rho; radii of 1/2
/// or more return the total mass.
class MassFunction {
 public:
  MassFunction() = default;
  MassFunction(std::span<const double> rho, double dx);

  /// int_0^y rho for any real y (periodic extension).
  double cumulative(double y) const;
  double ball_mass(double center, double radius) const;
  double total() const { return prefix_.back(); }
  std::size_t cells() const { return prefix_.size() - 1; }

 private:
  double dx_ = 1.0;
  std::vector<double> rho_;
  std::vector<double> prefix_ = {0.0};
};

/// G[x][v] = rho[x] sum_y K(m(x, |x - y|)) f[y][v] dx with m the mass
/// function of f's density. O(nx^2 nv). `quadrature_scale` multiplies the
/// quadrature weight dx (1 for the actual scheme; other values are used to
/// check that the oracles detect a wrong weight).
GridDensity gain(const GridDensity& f, const Kernel& kernel, unsigned threads = 1, double quadrature_scale = 1.0);

/// sum_y K(m(x, |x - y|)) rho[y] dx per x-cell; equals 1 in the continuum.
std::vector<double> coarea_integral(const GridDensity& f, const Kernel& kernel, double quadrature_scale = 1.0);

/// |coarea_integral - 1| per x-cell.
std::vector<double> coarea_check(const GridDensity& f, const Kernel& kernel, double quadrature_scale = 1.0);

/// Exact shift of every velocity row by v * tau with periodic linear
/// interpolation.
void transport(GridDensity& f, double tau);

struct StepReport {
  /// Mass after the collision substep, before renormalization.
  double mass_before_renormalization = 1.0;
  /// Factor applied to restore unit mass.
  double renormalization = 1.0;
};

/// One Strang step of length dt <= 1. Throws SolverInstability when a value
/// drops below -1e-12.
StepReport step(GridDensity& f, const Kernel& kernel, double dt, unsigned threads = 1);

struct KineticSolution {
  std::vector<GridDensity> snapshots;
  std::vector<StepReport> steps;
};

/// Integrates to T with steps of at most dt, landing exactly on every
/// requested snapshot time (each in [0, T]).
KineticSolution solve(const GridDensity& f0, const Kernel& kernel, double horizon, double dt,
                      std::span<const double> snapshot_times, unsigned threads = 1);

/// Binary layout (little-endian): "TLGD" magic, u32 version = 1, u64 nx,
/// u64 nv, f64 v_max, f64 t, nx*nv f64 row-major values.
void write_binary(std::ostream& out, const GridDensity& f);
GridDensity read_binary(std::istream& in);
/// CSV: a header line "nx,nv,v_max,t", its values, then nx rows of nv
/// values.
void write_csv(std::ostream& out, const GridDensity& f);
GridDensity read_csv(std::istream& in);

/// File name used for a snapshot at time t, e.g. "f_t0.500000.bin".
std::string snapshot_file_name(double t, const std::string& extension);

}  // namespace topolab
