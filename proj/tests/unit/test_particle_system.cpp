#include "topolab/errors.hpp"
#include "topolab/initial_law.hpp"
#include "topolab/particle_system.hpp"
#include "topolab/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace topolab;

namespace {

double half_l1(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

// Two sin^2 bumps of width 0.3 at 0.05 and 0.55, integrated by the midpoint rule.
double bimodal_cdf(double x) {
  const int m = 4000;
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const double y = (k + 0.5) * x / m;
    for (double a : {0.05, 0.55}) {
      if (y >= a && y <= a + 0.3) {
        const double s = std::sin(std::numbers::pi * (y - a) / 0.3);
        acc += s * s / 0.3;
      }
    }
  }
  return acc * x / m;
}

}  // namespace

TEST(FreeStream, PositionsWrapOnTheCircle) {
  const Configuration c(1, {0.9}, {0.5});
  const FreeStream s(c, false);
  EXPECT_NEAR(s.coordinate(0, 0, 0.4), 0.1, 1e-15);
  EXPECT_NEAR(s.coordinate(0, 0, 2.0), 0.9, 1e-15);
  const Configuration back(1, {0.1}, {-0.5});
  EXPECT_NEAR(FreeStream(back, false).coordinate(0, 0, 0.4), 0.9, 1e-15);
}

TEST(FreeStream, FrozenModeIgnoresVelocity) {
  const Configuration c(2, {0.2, 0.7}, {0.5, -0.25});
  const FreeStream s(c, true);
  EXPECT_EQ(s.coordinate(0, 0, 3.0), 0.2);
  EXPECT_EQ(s.coordinate(0, 1, 3.0), 0.7);
}

TEST(FreeStream, SetVelocityReanchors) {
  const Configuration c(1, {0.0}, {0.5});
  FreeStream s(c, false);
  const double v[1] = {-0.25};
  s.set_velocity(0, 0.4, v);
  EXPECT_NEAR(s.coordinate(0, 0, 0.4), 0.2, 1e-15);
  EXPECT_NEAR(s.coordinate(0, 0, 0.8), 0.1, 1e-15);
  EXPECT_EQ(s.velocity(0)[0], -0.25);
  EXPECT_NEAR(s.snapshot(0.8).position(0)[0], 0.1, 1e-15);
}

TEST(Simulate, DeterministicGivenSeed) {
  ProcessParams p;
  p.kernel = Kernel::linear();
  p.n = 20;
  p.seed = 5;
  const auto initial = sample_initial(InitialLaw{}, 20, 1, 3);
  const auto a = simulate(p, initial);
  const auto b = simulate(p, initial);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    EXPECT_EQ(a.events[k].time, b.events[k].time);
    EXPECT_EQ(a.events[k].partner, b.events[k].partner);
  }
  EXPECT_EQ(a.final_state, b.final_state);
}

TEST(Simulate, EventsOrderedAndVelocitiesInherited) {
  ProcessParams p;
  p.kernel = Kernel::truncated_linear(0.5);
  p.n = 30;
  p.horizon = 2.0;
  p.seed = 9;
  p.snapshot_times = {0.0, 1.0, 2.0};
  const auto initial = sample_initial(InitialLaw{}, 30, 1, 4);
  const auto traj = simulate(p, initial);
  std::set<double> allowed(initial.velocities().begin(), initial.velocities().end());
  double last = 0.0;
  for (const auto& e : traj.events) {
    EXPECT_GE(e.time, last);
    EXPECT_LE(e.time, p.horizon);
    EXPECT_NE(e.focal, e.partner);
    EXPECT_GE(e.rank, 1u);
    // truncated at 1/2: only ranks with (h-1)/(n-1) < 1/2 have positive weight
    EXPECT_LT(static_cast<double>(e.rank - 1) / 29.0, 0.5);
    last = e.time;
  }
  for (double v : traj.final_state.velocities()) EXPECT_TRUE(allowed.count(v));
  ASSERT_EQ(traj.snapshots.size(), 3u);
  EXPECT_EQ(traj.snapshots[0].state.velocities().size(), 30u);
}

TEST(Simulate, UniformKernelPicksPartnersUniformly) {
  ProcessParams p;
  p.kernel = Kernel::uniform();
  p.n = 6;
  p.horizon = 20000.0;
  p.seed = 17;
  const auto traj = simulate(p, sample_initial(InitialLaw{}, 6, 1, 2));
  std::vector<double> pairs(30, 0.0);
  for (const auto& e : traj.events) pairs[e.focal * 5 + (e.partner < e.focal ? e.partner : e.partner - 1)] += 1.0;
  EXPECT_GT(stats::chi_square_gof(pairs, std::vector<double>(30, 1.0 / 30.0)).p_value, 0.01);
  // Poisson(N T) event count
  const double mean = 6.0 * 20000.0;
  EXPECT_LT(std::abs(static_cast<double>(traj.events.size()) - mean), 4.0 * std::sqrt(mean));
}

TEST(MasterEquation, TwoParticlesClosedForm) {
  const std::vector<double> alphabet{-1.0, 1.0};
  const Configuration c(1, {0.2, 0.6}, {-1.0, 1.0});
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    const auto law = master_equation_law(Kernel::uniform(), c, alphabet, t);
    ASSERT_EQ(law.size(), 4u);
    // states: (-,-) = 0, (-,+) = 1, (+,-) = 2, (+,+) = 3
    EXPECT_NEAR(law[1], std::exp(-2.0 * t), 1e-12);
    EXPECT_NEAR(law[0], 0.5 * (1.0 - std::exp(-2.0 * t)), 1e-12);
    EXPECT_NEAR(law[3], 0.5 * (1.0 - std::exp(-2.0 * t)), 1e-12);
    EXPECT_NEAR(law[2], 0.0, 1e-12);
  }
}

TEST(MasterEquation, LawIsAProbabilityVector) {
  const std::vector<double> alphabet{-0.5, 0.0, 0.5};
  const Configuration c(1, {0.1, 0.35, 0.8}, {-0.5, 0.0, 0.5});
  const auto law = master_equation_law(Kernel::linear(), c, alphabet, 0.7);
  double s = 0.0;
  for (double p : law) {
    EXPECT_GE(p, -1e-14);
    s += p;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(label_state(c, alphabet), 0u * 9 + 1u * 3 + 2u);
}

TEST(MasterEquation, RefusesLargeStateSpaces) {
  const Configuration five(1, {0.1, 0.2, 0.3, 0.4, 0.5}, {0, 0, 0, 0, 0});
  const std::vector<double> one{0.0};
  EXPECT_THROW(master_equation_law(Kernel::uniform(), five, one, 1.0), ValidationError);
  const Configuration two(1, {0.1, 0.2}, {0, 0});
  const std::vector<double> many{0, 1, 2, 3, 4};
  EXPECT_THROW(master_equation_law(Kernel::uniform(), two, many, 1.0), ValidationError);
}

TEST(MasterEquation, SimulationMatchesExactLawThreeParticles) {
  const std::vector<double> alphabet{-0.5, 0.0, 0.5};
  const Configuration frozen(1, {0.15, 0.4, 0.7}, {0.5, -0.5, 0.0});
  const auto exact = master_equation_law(Kernel::linear(), frozen, alphabet, 1.0);
  ProcessParams p;
  p.kernel = Kernel::linear();
  p.n = 3;
  p.frozen_positions = true;
  Rng rng(33);
  std::vector<double> freq(exact.size(), 0.0);
  const int runs = 100000;
  for (int r = 0; r < runs; ++r) freq[label_state(simulate(p, frozen, rng).final_state, alphabet)] += 1.0 / runs;
  EXPECT_LE(half_l1(freq, exact), 0.01);
}

TEST(MasterEquation, SimulationMatchesExactLawTwoParticles) {
  const std::vector<double> alphabet{-1.0, 1.0};
  const Configuration frozen(1, {0.2, 0.6}, {-1.0, 1.0});
  ProcessParams p;
  p.kernel = Kernel::uniform();
  p.n = 2;
  p.frozen_positions = true;
  Rng rng(34);
  std::vector<double> freq(4, 0.0);
  const int runs = 1000000;
  for (int r = 0; r < runs; ++r) freq[label_state(simulate(p, frozen, rng).final_state, alphabet)] += 1.0 / runs;
  const double e = std::exp(-2.0);
  EXPECT_LE(half_l1(freq, {0.5 * (1 - e), e, 0.0, 0.5 * (1 - e)}), 0.005);
}

TEST(InitialLaw, CosineSamplesFollowTheLaw) {
  InitialLaw law;
  law.spatial.form = SpatialLaw::Form::Cosine;
  law.spatial.amplitude = 0.5;
  const auto c = sample_initial(law, 10000, 1, 8);
  const std::vector<double> x(c.positions().begin(), c.positions().end());
  const auto r = stats::ks_one_sample(x, [](double y) { return y + 0.5 * std::sin(2 * std::numbers::pi * y) / (2 * std::numbers::pi); });
  EXPECT_GT(r.p_value, 0.01);
  for (double v : c.velocities()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(InitialLaw, BimodalSamplesFollowTheLaw) {
  InitialLaw law;
  law.spatial.form = SpatialLaw::Form::Bimodal;
  const auto c = sample_initial(law, 10000, 1, 9);
  const std::vector<double> x(c.positions().begin(), c.positions().end());
  EXPECT_GT(stats::ks_one_sample(x, bimodal_cdf).p_value, 0.01);
  EXPECT_NEAR(bimodal_cdf(1.0), 1.0, 1e-6);
}

TEST(InitialLaw, TwoPointVelocities) {
  InitialLaw law;
  law.velocity.form = VelocityLaw::Form::TwoPoint;
  law.velocity.half_width = 0.5;
  const auto c = sample_initial(law, 2000, 2, 10);
  int plus = 0;
  for (double v : c.velocities()) {
    ASSERT_TRUE(v == 0.5 || v == -0.5);
    plus += v > 0;
  }
  EXPECT_NEAR(plus / 4000.0, 0.5, 4.0 * 0.5 / std::sqrt(4000.0));
}

TEST(EmpiricalMarginal, BinsAndNormalizes) {
  const Configuration c(1, {0.01, 0.26, 0.99, 0.5}, {-0.9, 0.1, 5.0, -5.0});
  const HistogramSpec spec{4, 2, 1.0};
  const auto h = empirical_marginal(c, spec);
  ASSERT_EQ(h.size(), 8u);
  EXPECT_EQ(h[0 * 2 + 0], 0.25);
  EXPECT_EQ(h[1 * 2 + 1], 0.25);
  EXPECT_EQ(h[3 * 2 + 1], 0.25);
  EXPECT_EQ(h[2 * 2 + 0], 0.25);
}

TEST(Simulate, CsvFilesCarryVersionLines) {
  ProcessParams p;
  p.n = 4;
  p.snapshot_times = {0.5};
  const auto traj = simulate(p, sample_initial(InitialLaw{}, 4, 1, 1));
  std::ostringstream ev;
  std::ostringstream sn;
  write_events_csv(ev, traj);
  write_snapshots_csv(sn, traj);
  EXPECT_EQ(ev.str().rfind("# topolab events v1\n", 0), 0u);
  EXPECT_EQ(sn.str().rfind("# topolab snapshots v1\n", 0), 0u);
}
