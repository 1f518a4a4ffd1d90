#include "topolab/reference.hpp"

#include "topolab/configuration.hpp"
#include "topolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace topolab {

KineticReference::KineticReference(std::vector<GridDensity> snapshots) : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw ValidationError("kinetic reference: no snapshots");
  const auto& spec = snapshots_.front().spec();
  for (std::size_t k = 0; k < snapshots_.size(); ++k) {
    const auto& s = snapshots_[k].spec();
    if (s.nx != spec.nx || s.nv != spec.nv || s.v_max != spec.v_max) {
      throw ValidationError("kinetic reference: snapshots use different grids");
    }
    if (k > 0 && !(snapshots_[k].time() > snapshots_[k - 1].time())) {
      throw ValidationError("kinetic reference: snapshot times must increase");
    }
    const auto rho = density(snapshots_[k]);
    masses_.emplace_back(rho, snapshots_[k].dx());
  }
}

KineticReference::Bracket KineticReference::bracket(double t) const {
  // Tolerate rounding at the ends of the stored interval.
  const double slack = 1e-9;
  if (t < start_time() - slack || t > end_time() + slack) {
    throw ValidationError("kinetic reference: no snapshot covers the requested time");
  }
  if (snapshots_.size() == 1 || t <= start_time()) return {0, 0, 0.0};
  if (t >= end_time()) return {snapshots_.size() - 1, snapshots_.size() - 1, 0.0};
  const auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t,
                                   [](double x, const GridDensity& g) { return x < g.time(); });
  const auto hi = static_cast<std::size_t>(it - snapshots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - snapshots_[lo].time()) / (snapshots_[hi].time() - snapshots_[lo].time());
  return {lo, hi, w};
}

double KineticReference::ball_mass(double t, std::span<const double> center, double radius) const {
  const auto b = bracket(t);
  const double lo = masses_[b.lo].ball_mass(center[0], radius);
  if (b.weight == 0.0) return lo;
  return (1.0 - b.weight) * lo + b.weight * masses_[b.hi].ball_mass(center[0], radius);
}

GridDensity KineticReference::density_at(double t) const {
  const auto b = bracket(t);
  GridDensity out = snapshots_[b.lo];
  if (b.weight != 0.0) {
    auto& values = out.values();
    const auto& upper = snapshots_[b.hi].values();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = (1.0 - b.weight) * values[k] + b.weight * upper[k];
  }
  out.set_time(t);
  return out;
}

void KineticReference::sample_velocity(double t, std::span<const double> origin, const Kernel& kernel, Rng& rng,
                                       std::span<double> out) const {
  const auto b = bracket(t);
  const auto& grid = snapshots_[b.lo];
  const std::size_t nx = grid.nx();
  const std::size_t nv = grid.nv();
  // Spatial weights K(M_rho(B_{|y_i - y|}(y_i))) dx over x-cell centres.
  std::vector<double> weights(nx);
  const double y0[1] = {origin[0]};
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double yc[1] = {grid.x_center(ix)};
    weights[ix] = kernel(ball_mass(t, y0, torus_distance(y0, yc))) * grid.dx();
  }
  std::vector<double> cumulative(nv);
  double acc = 0.0;
  for (std::size_t iv = 0; iv < nv; ++iv) {
    double sum = 0.0;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double value = grid.at(ix, iv);
      if (b.weight != 0.0) value = (1.0 - b.weight) * value + b.weight * snapshots_[b.hi].at(ix, iv);
      sum += weights[ix] * value;
    }
    acc += sum;
    cumulative[iv] = acc;
  }
  if (!(acc > 0.0)) throw InvariantViolation("kinetic reference: velocity law has no mass");
  const double target = rng.uniform() * acc;
  auto iv = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
  if (iv >= nv) iv = nv - 1;
  out[0] = grid.v_center(iv);
}

HomogeneousReference::HomogeneousReference(int dim, VelocityLaw velocity, double horizon)
    : dim_(dim), velocity_(std::move(velocity)), horizon_(horizon) {
  if (dim != 1 && dim != 2) throw ValidationError("homogeneous reference: dimension must be 1 or 2");
}

double HomogeneousReference::ball_mass(double, std::span<const double>, double radius) const {
  return torus_ball_volume(dim_, radius);
}

void HomogeneousReference::sample_velocity(double, std::span<const double>, const Kernel&, Rng& rng,
                                           std::span<double> out) const {
  for (int k = 0; k < dim_; ++k) out[k] = velocity_.sample(rng);
}

GridDensity HomogeneousReference::grid_density(double t, const GridSpec& bins) const {
  if (dim_ != 1) throw ValidationError("homogeneous reference: grid density needs d = 1");
  GridDensity f = discretize(InitialLaw{SpatialLaw{}, velocity_}, bins);
  f.set_time(t);
  return f;
}

double torus_ball_volume(int dim, double radius) {
  if (radius <= 0.0) return 0.0;
  if (dim == 1) return std::min(1.0, 2.0 * radius);
  if (radius <= 0.5) return std::numbers::pi * radius * radius;
  if (radius >= std::numbers::sqrt2 / 2.0) return 1.0;
  // Disk minus the four caps beyond the square's sides; the caps are
  // disjoint while r < sqrt(2)/2.
  const double h = 0.5;
  const double cap = radius * radius * std::acos(h / radius) - h * std::sqrt(radius * radius - h * h);
  return std::min(1.0, std::numbers::pi * radius * radius - 4.0 * cap);
}

}  // namespace topolab
