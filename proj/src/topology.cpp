#include "topolab/topology.hpp"

#include "topolab/errors.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace topolab {

namespace {

void check_index(const Configuration& config, std::size_t i) {
  if (i >= config.size()) throw DomainError("particle index out of range");
}

std::vector<std::pair<double, std::size_t>> keyed_neighbours(std::span<const double> positions, int dim,
                                                              std::size_t focal) {
  const std::size_t n = positions.size() / dim;
  const auto origin = positions.subspan(focal * dim, dim);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == focal) continue;
    keyed.emplace_back(torus_distance(origin, positions.subspan(j * dim, dim)), j);
  }
  return keyed;
}

double riemann_sum(const Kernel& kernel, std::size_t n) {
  const double m = static_cast<double>(n - 1);
  // Neumaier summation: the error e_K(n) is a small difference of O(1)
  // quantities, so plain accumulation would swamp it for large n.
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t s = 1; s < n; ++s) {
    const double x = kernel(static_cast<double>(s) / m);
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

}  // namespace

std::vector<std::size_t> RankTable::ranks() const {
  std::vector<std::size_t> out(order.size() + 1, 0);
  for (std::size_t h = 0; h < order.size(); ++h) out[order[h]] = h + 1;
  return out;
}

RankTable rank_table(const Configuration& config, std::size_t focal) {
  check_index(config, focal);
  auto keyed = keyed_neighbours(config.positions(), config.dim(), focal);
  std::sort(keyed.begin(), keyed.end());
  RankTable table;
  table.focal = focal;
  table.order.reserve(keyed.size());
  table.distances.reserve(keyed.size());
  for (std::size_t h = 0; h < keyed.size(); ++h) {
    table.order.push_back(keyed[h].second);
    table.distances.push_back(keyed[h].first);
    if (h > 0 && keyed[h].first == keyed[h - 1].first) ++table.tie_breaks_count;
  }
  return table;
}

std::size_t rank(const Configuration& config, std::size_t i, std::size_t j) {
  check_index(config, i);
  check_index(config, j);
  if (i == j) throw DomainError("rank: i and j must differ");
  const auto origin = config.position(i);
  const std::pair<double, std::size_t> key{torus_distance(origin, config.position(j)), j};
  std::size_t closer = 0;
  for (std::size_t h = 0; h < config.size(); ++h) {
    if (h == i || h == j) continue;
    if (std::pair<double, std::size_t>{torus_distance(origin, config.position(h)), h} < key) ++closer;
  }
  return closer + 1;
}

double empirical_mass(const Configuration& config, std::size_t focal, std::span<const double> center, double radius) {
  check_index(config, focal);
  if (radius < 0.0) throw DomainError("empirical_mass: negative radius");
  if (config.size() < 2) return 0.0;
  std::size_t inside = 0;
  for (std::size_t h = 0; h < config.size(); ++h) {
    if (h != focal && torus_distance(center, config.position(h)) <= radius) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(config.size() - 1);
}

double riemann_error(const Kernel& kernel, std::size_t n) {
  if (n < 2) throw DomainError("riemann_error: n must be at least 2");
  return kernel.integral() - riemann_sum(kernel, n) / static_cast<double>(n - 1);
}

double alpha(const Kernel& kernel, std::size_t n) {
  const double e = riemann_error(kernel, n);
  if (e >= 1.0) throw DegenerateNormalization("alpha: Riemann sum of the kernel vanishes for this n");
  return 1.0 / (static_cast<double>(n - 1) * (1.0 - e));
}

std::vector<double> transition_probs(const Configuration& config, const Kernel& kernel, std::size_t i) {
  const std::size_t n = config.size();
  if (n < 2) throw DomainError("transition_probs: need at least two particles");
  const double a = alpha(kernel, n);
  const auto ranks = rank_table(config, i).ranks();
  std::vector<double> probs(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) probs[j] = a * kernel(static_cast<double>(ranks[j]) / static_cast<double>(n - 1));
  }
  return probs;
}

std::vector<double> transition_probs_direct(const Configuration& config, const Kernel& kernel, std::size_t i) {
  const std::size_t n = config.size();
  if (n < 2) throw DomainError("transition_probs: need at least two particles");
  const double normalizer = riemann_sum(kernel, n);
  if (!(normalizer > 0.0)) throw DegenerateNormalization("transition_probs: kernel vanishes on all ranks");
  const auto ranks = rank_table(config, i).ranks();
  std::vector<double> probs(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) probs[j] = kernel(static_cast<double>(ranks[j]) / static_cast<double>(n - 1)) / normalizer;
  }
  return probs;
}

RankLaw::RankLaw(const Kernel& kernel, std::size_t n) : n_(n), alpha_(topolab::alpha(kernel, n)) {
  probs_.resize(n - 1);
  cdf_.resize(n - 1);
  double acc = 0.0;
  for (std::size_t h = 1; h < n; ++h) {
    probs_[h - 1] = alpha_ * kernel(static_cast<double>(h) / static_cast<double>(n - 1));
    acc += probs_[h - 1];
    cdf_[h - 1] = acc;
  }
}

std::size_t RankLaw::sample(double u) const {
  // Scale by the computed total so rounding in the CDF can never leave u
  // beyond the last bucket.
  const double target = u * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t h = static_cast<std::size_t>(it - cdf_.begin()) + 1;
  if (h > n_ - 1) h = n_ - 1;
  // Never return a rank of zero weight (possible only through rounding).
  while (probs_[h - 1] == 0.0 && h > 1) --h;
  return h;
}

std::size_t nth_closest(std::span<const double> positions, int dim, std::size_t focal, std::size_t h) {
  auto keyed = keyed_neighbours(positions, dim, focal);
  if (h < 1 || h > keyed.size()) throw DomainError("nth_closest: rank out of range");
  std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(h - 1), keyed.end());
  return keyed[h - 1].second;
}

std::size_t nth_closest_sorted(std::span<const double> positions, int dim, std::size_t focal, std::size_t h) {
  auto keyed = keyed_neighbours(positions, dim, focal);
  if (h < 1 || h > keyed.size()) throw DomainError("nth_closest: rank out of range");
  std::sort(keyed.begin(), keyed.end());
  return keyed[h - 1].second;
}

}  // namespace topolab
