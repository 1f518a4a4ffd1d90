#include "topolab/errors.hpp"
#include "topolab/initial_law.hpp"
#include "topolab/stats.hpp"
#include "topolab/topology.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace topolab;

namespace {

Configuration random_config(std::size_t n, int dim, std::uint64_t seed) {
  return sample_initial(InitialLaw{}, n, dim, seed);
}

// Rank by sorting all other particles on (distance, index).
std::vector<std::size_t> brute_ranks(const Configuration& c, std::size_t i) {
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j != i) others.push_back(j);
  }
  std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    double da = 0.0;
    double db = 0.0;
    for (int k = 0; k < c.dim(); ++k) {
      double x = std::abs(c.position(i)[k] - c.position(a)[k]);
      double y = std::abs(c.position(i)[k] - c.position(b)[k]);
      x = std::min(x, 1.0 - x);
      y = std::min(y, 1.0 - y);
      da += x * x;
      db += y * y;
    }
    return da != db ? da < db : a < b;
  });
  std::vector<std::size_t> r(c.size(), 0);
  for (std::size_t h = 0; h < others.size(); ++h) r[others[h]] = h + 1;
  return r;
}

Configuration line(std::vector<double> x) {
  return Configuration(1, x, std::vector<double>(x.size(), 0.0));
}

}  // namespace

TEST(Topology, TorusDistanceUsesMinimumImage) {
  const double a[1] = {0.05};
  const double b[1] = {0.95};
  EXPECT_NEAR(torus_distance(a, b), 0.1, 1e-15);
  const double p[2] = {0.1, 0.9};
  const double q[2] = {0.9, 0.1};
  EXPECT_NEAR(torus_distance(p, q), std::sqrt(0.08), 1e-15);
}

TEST(Topology, RankMatchesBruteForce) {
  for (int dim : {1, 2}) {
    const auto c = random_config(64, dim, 100 + dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto expected = brute_ranks(c, i);
      const auto table = rank_table(c, i).ranks();
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (j == i) continue;
        ASSERT_EQ(rank(c, i, j), expected[j]);
        ASSERT_EQ(table[j], expected[j]);
      }
    }
  }
}

TEST(Topology, TiesBrokenByAscendingIndex) {
  const auto c = line({0.5, 0.625, 0.375, 0.75});
  EXPECT_EQ(rank(c, 0, 1), 1u);
  EXPECT_EQ(rank(c, 0, 2), 2u);
  EXPECT_EQ(rank(c, 0, 3), 3u);
  EXPECT_GE(rank_table(c, 0).tie_breaks_count, 1u);
}

TEST(Topology, RankRejectsBadIndices) {
  const auto c = line({0.1, 0.2, 0.3});
  EXPECT_THROW(rank(c, 1, 1), DomainError);
  EXPECT_THROW(rank(c, 0, 3), DomainError);
}

TEST(Topology, EmpiricalMassEqualsNormalizedRank) {
  const auto c = random_config(128, 1, 7);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (i == j) continue;
      const double d = torus_distance(c.position(i), c.position(j));
      ASSERT_NEAR(empirical_mass(c, i, c.position(i), d), static_cast<double>(rank(c, i, j)) / 127.0, 1e-15);
    }
  }
}

TEST(Topology, RiemannErrorLinearClosedForm) {
  EXPECT_NEAR(riemann_error(Kernel::linear(), 3), 0.5, 1e-15);
  for (std::size_t n = 3; n <= 4096; ++n) {
    ASSERT_NEAR(riemann_error(Kernel::linear(), n), 1.0 / static_cast<double>(n - 1), 1e-12);
  }
  EXPECT_EQ(riemann_error(Kernel::uniform(), 17), 0.0);
}

TEST(Topology, RiemannErrorLipschitzBound) {
  const std::vector<Kernel> kernels{Kernel::uniform(), Kernel::linear(), Kernel::truncated_linear(0.3),
                                    Kernel::tabulated({{0.0, 1.5}, {0.5, 1.0}, {1.0, 0.5}})};
  for (const auto& k : kernels) {
    for (std::size_t n = 3; n <= 4096; ++n) {
      ASSERT_LE(std::abs(riemann_error(k, n)), k.lipschitz() / static_cast<double>(n - 1) + 1e-15);
    }
  }
}

TEST(Topology, AlphaValues) {
  EXPECT_NEAR(alpha(Kernel::linear(), 3), 1.0, 1e-15);
  EXPECT_NEAR(alpha(Kernel::linear(), 5), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(alpha(Kernel::uniform(), 11), 0.1, 1e-15);
  EXPECT_THROW(alpha(Kernel::linear(), 2), DegenerateNormalization);
  EXPECT_THROW(alpha(Kernel::truncated_linear(0.4), 3), DegenerateNormalization);
}

TEST(Topology, LinearThreeParticles) {
  const auto c = line({0.1, 0.3, 0.6});
  const auto p = transition_probs(c, Kernel::linear(), 1);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
}

TEST(Topology, RowsSumToOneAndFormsAgree) {
  const std::vector<Kernel> kernels{Kernel::uniform(), Kernel::linear(), Kernel::truncated_linear(0.75),
                                    Kernel::tabulated({{0.0, 1.5}, {0.5, 1.0}, {1.0, 0.5}})};
  for (const auto& k : kernels) {
    for (std::size_t n : {3, 10, 100}) {
      const auto c = random_config(n, 1, n);
      for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 10)) {
        const auto p = transition_probs(c, k, i);
        const auto q = transition_probs_direct(c, k, i);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          sum += p[j];
          ASSERT_NEAR(p[j], q[j], 1e-12);
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(Topology, RankLawInverseCdf) {
  const RankLaw law(Kernel::linear(), 5);
  double total = 0.0;
  for (std::size_t h = 1; h <= 4; ++h) total += law.prob(h);
  EXPECT_NEAR(total, 1.0, 1e-15);
  // probabilities 1/2, 1/3, 1/6, 0
  EXPECT_NEAR(law.prob(1), 0.5, 1e-15);
  EXPECT_EQ(law.sample(0.0), 1u);
  EXPECT_EQ(law.sample(0.49), 1u);
  EXPECT_EQ(law.sample(0.51), 2u);
  EXPECT_EQ(law.sample(0.83), 2u);
  EXPECT_EQ(law.sample(0.9), 3u);
  EXPECT_EQ(law.sample(0.999999999), 3u);
}

TEST(Topology, RankLawFrequencies) {
  const RankLaw law(Kernel::truncated_linear(0.6), 12);
  Rng rng(12);
  std::vector<double> counts(11, 0.0);
  std::vector<double> probs(11);
  for (std::size_t h = 1; h <= 11; ++h) probs[h - 1] = law.prob(h);
  for (int k = 0; k < 100000; ++k) counts[law.sample(rng.uniform()) - 1] += 1.0;
  EXPECT_GT(stats::chi_square_gof(counts, probs).p_value, 0.01);
}

TEST(Topology, NthClosestMatchesFullSort) {
  for (int dim : {1, 2}) {
    const auto c = random_config(50, dim, 77 + dim);
    for (std::size_t i = 0; i < c.size(); i += 7) {
      const auto ranks = brute_ranks(c, i);
      for (std::size_t h = 1; h < c.size(); ++h) {
        const auto j = nth_closest(c.positions(), dim, i, h);
        ASSERT_EQ(j, nth_closest_sorted(c.positions(), dim, i, h));
        ASSERT_EQ(ranks[j], h);
      }
    }
  }
  const auto c = line({0.5, 0.6, 0.4});
  EXPECT_THROW(nth_closest(c.positions(), 1, 0, 3), DomainError);
}
