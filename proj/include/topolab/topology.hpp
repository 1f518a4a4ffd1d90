#pragma once

// Rank-based ("topological") interaction quantities: ranks, normalized ranks,
// empirical masses, the Riemann error of the kernel and the transition
// probabilities pi_{i,j} = alpha_N K(r(i,j)).
//
// Indices are 0-based; ranks are 1-based (rank 1 is the nearest neighbour).
// Distance ties are broken by ascending particle index.

#include "topolab/configuration.hpp"
#include "topolab/kernel.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace topolab {

struct RankTable {
  std::size_t focal = 0;
  /// The other n-1 indices, nearest first.
  std::vector<std::size_t> order;
  std::vector<double> distances;
  /// Number of adjacent pairs in `order` at equal distance.
  std::size_t tie_breaks_count = 0;

  /// rank_of[j] = R(focal, j); rank_of[focal] = 0.
  std::vector<std::size_t> ranks() const;
};

RankTable rank_table(const Configuration& config, std::size_t focal);

/// R(i, j), computed in O(n) without sorting.
std::size_t rank(const Configuration& config, std::size_t i, std::size_t j);

/// Fraction of particles other than `focal` inside the closed ball
/// B_radius(center).
double empirical_mass(const Configuration& config, std::size_t focal, std::span<const double> center, double radius);

/// e_K(n) = int K - (1/(n-1)) sum_{s=1}^{n-1} K(s/(n-1)).
double riemann_error(const Kernel& kernel, std::size_t n);

/// alpha_N = 1/((n-1)(1 - e_K(n))). Throws DegenerateNormalization when
/// e_K(n) >= 1.
double alpha(const Kernel& kernel, std::size_t n);

/// pi_{i,.} = alpha_N K(r(i,.)) as a length-n vector with a zero at i.
std::vector<double> transition_probs(const Configuration& config, const Kernel& kernel, std::size_t i);

/// The same probabilities in the direct form K(r(i,j)) / sum_s K(s/(n-1)).
std::vector<double> transition_probs_direct(const Configuration& config, const Kernel& kernel, std::size_t i);

/// Law of the partner's rank h in {1..n-1}: P(h) = alpha_N K(h/(n-1)).
/// Since j -> R(i,j) is a bijection, drawing h and taking the particle of
/// rank h samples the partner exactly from pi_{i,.}.
class RankLaw {
 public:
  RankLaw(const Kernel& kernel, std::size_t n);

  std::size_t n() const { return n_; }
  double alpha() const { return alpha_; }
  /// alpha_N K(h/(n-1)).
  double prob(std::size_t h) const { return probs_[h - 1]; }
  /// Inverse-CDF draw from a uniform u in [0,1).
  std::size_t sample(double u) const;

 private:
  std::size_t n_;
  double alpha_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

/// Index of the particle with rank h relative to `focal`, given flat
/// particle-major positions. Selection runs in O(n).
std::size_t nth_closest(std::span<const double> positions, int dim, std::size_t focal, std::size_t h);

/// Reference implementation of nth_closest via a full sort; same output.
std::size_t nth_closest_sorted(std::span<const double> positions, int dim, std::size_t focal, std::size_t h);

}  // namespace topolab
