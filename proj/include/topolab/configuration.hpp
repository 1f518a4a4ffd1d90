#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace topolab {

/// Reduces a coordinate to [0, 1).
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// Minimum-image Euclidean distance on the unit d-torus.
inline double torus_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() == 1) {
    const double dx = std::abs(a[0] - b[0]);
    return dx > 0.5 ? 1.0 - dx : dx;
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double dx = std::abs(a[k] - b[k]);
    if (dx > 0.5) dx = 1.0 - dx;
    sq += dx * dx;
  }
  return std::sqrt(sq);
}

/// Positions and velocities of n particles on the unit d-torus, d in {1,2}.
/// Coordinates are stored particle-major: particle i occupies
/// [i*d, (i+1)*d).
class Configuration {
 public:
  Configuration() = default;
  /// Positions are wrapped into [0,1). Throws DomainError on n < 1, d not in
  /// {1,2} or mismatched lengths.
  Configuration(int dim, std::vector<double> positions, std::vector<double> velocities);

  std::size_t size() const { return dim_ == 0 ? 0 : positions_.size() / dim_; }
  int dim() const { return dim_; }

  std::span<const double> position(std::size_t i) const { return {positions_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> velocity(std::size_t i) const { return {velocities_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<const double> positions() const { return positions_; }
  std::span<const double> velocities() const { return velocities_; }

  bool operator==(const Configuration&) const = default;

 private:
  int dim_ = 0;
  std::vector<double> positions_;
  std::vector<double> velocities_;
};

}  // namespace topolab
