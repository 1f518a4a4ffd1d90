#include "topolab/errors.hpp"
#include "topolab/kinetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace topolab;

namespace {

InitialLaw cosine_law(double amplitude = 0.5) {
  InitialLaw law;
  law.spatial.form = SpatialLaw::Form::Cosine;
  law.spatial.amplitude = amplitude;
  return law;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

double l1(const GridDensity& a, const GridDensity& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s += std::abs(a.values()[k] - b.values()[k]);
  return s * a.dx() * a.dv();
}

}  // namespace

TEST(Kinetic, DiscretizeHasUnitMassAndExactCells) {
  const auto f = discretize(cosine_law(), GridSpec{64, 8, 1.0});
  EXPECT_NEAR(f.total_mass(), 1.0, 1e-14);
  const auto rho = density(f);
  // cell average of 1 + 0.5 cos(2 pi x) on [0, 1/64)
  const double expected = 1.0 + 0.5 * std::sin(2 * std::numbers::pi / 64) / (2 * std::numbers::pi / 64);
  EXPECT_NEAR(rho[0], expected, 1e-12);
}

TEST(Kinetic, DiscretizeRejectsVelocitiesOutsideGrid) {
  InitialLaw law;
  law.velocity.half_width = 2.0;
  EXPECT_THROW(discretize(law, GridSpec{16, 4, 1.0}), ValidationError);
}

TEST(MassFunction, BallMassesOfPiecewiseConstantDensity) {
  const std::vector<double> rho{2.0, 0.0, 1.0, 1.0};
  const MassFunction m(rho, 0.25);
  EXPECT_NEAR(m.total(), 1.0, 1e-15);
  EXPECT_NEAR(m.cumulative(0.125), 0.25, 1e-15);
  EXPECT_NEAR(m.cumulative(1.125), 1.25, 1e-15);
  EXPECT_NEAR(m.cumulative(-0.125), -0.125, 1e-15);
  EXPECT_NEAR(m.ball_mass(0.125, 0.125), 0.5, 1e-15);
  // ball around 0 wraps: [0.875, 1) has density 1, [0, 0.125) density 2
  EXPECT_NEAR(m.ball_mass(0.0, 0.125), 0.375, 1e-15);
  EXPECT_EQ(m.ball_mass(0.3, 0.0), 0.0);
  EXPECT_EQ(m.ball_mass(0.3, 0.5), 1.0);
}

TEST(Gain, UniformKernelGivesDensityTimesVelocityMarginal) {
  auto law = cosine_law();
  law.velocity.form = VelocityLaw::Form::TwoPoint;
  law.velocity.half_width = 0.5;
  auto f = discretize(law, GridSpec{32, 4, 1.0});
  f.at(3, 0) += 0.7;  // break the product structure
  const auto g = gain(f, Kernel::uniform());
  const auto rho = density(f);
  for (std::size_t iv = 0; iv < f.nv(); ++iv) {
    double marginal = 0.0;
    for (std::size_t iy = 0; iy < f.nx(); ++iy) marginal += f.at(iy, iv) * f.dx();
    for (std::size_t ix = 0; ix < f.nx(); ++ix) ASSERT_NEAR(g.at(ix, iv), rho[ix] * marginal, 1e-13);
  }
}

TEST(Gain, SpatiallyUniformStateIsAFixedPoint) {
  // With rho = 1 the sum over cells is the trapezoid rule for int K = 1,
  // exact for a linear kernel.
  const auto f = discretize(InitialLaw{}, GridSpec{64, 8, 1.0});
  const auto g = gain(f, Kernel::linear());
  for (std::size_t k = 0; k < f.values().size(); ++k) ASSERT_NEAR(g.values()[k], f.values()[k], 1e-13);
}

TEST(Gain, FourCellHandCheck) {
  // All mass in cell 0: rho0 = 4, dx = 1/4, ball of radius 0 has mass 0, K(0) = 2.
  GridDensity f(GridSpec{4, 1, 1.0}, 0.0);
  f.at(0, 0) = 2.0;  // rho = f dv = 4
  const auto g = gain(f, Kernel::linear());
  EXPECT_NEAR(g.at(0, 0), 2.0 * f.at(0, 0), 1e-15);
  for (std::size_t ix = 1; ix < 4; ++ix) EXPECT_EQ(g.at(ix, 0), 0.0);
}

TEST(Coarea, SecondOrderInDx) {
  double previous = 0.0;
  for (std::size_t nx : {128, 256, 512}) {
    const auto r = max_of(coarea_check(discretize(cosine_law(), GridSpec{nx, 2, 1.0}), Kernel::linear()));
    EXPECT_LE(r, 5e-3);
    if (previous > 0.0) EXPECT_GE(previous / r, 3.0);
    previous = r;
  }
}

TEST(Coarea, WrongWeightIsDetected) {
  const auto f = discretize(cosine_law(), GridSpec{256, 2, 1.0});
  EXPECT_GT(max_of(coarea_check(f, Kernel::linear(), 1.01)), 5e-3);
}

TEST(Collision, MassChangeEqualsCoareaDefect) {
  auto law = cosine_law(0.8);
  const auto f = discretize(law, GridSpec{128, 8, 1.0});
  const auto g = gain(f, Kernel::truncated_linear(0.6));
  const auto c = coarea_integral(f, Kernel::truncated_linear(0.6));
  const auto rho = density(f);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t ix = 0; ix < f.nx(); ++ix) {
    for (std::size_t iv = 0; iv < f.nv(); ++iv) lhs += (g.at(ix, iv) - f.at(ix, iv)) * f.dx() * f.dv();
    rhs += rho[ix] * (c[ix] - 1.0) * f.dx();
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Transport, WholeCellShiftIsAPermutation) {
  GridDensity f(GridSpec{8, 2, 1.0}, 0.0);  // velocity centres -0.5, 0.5
  for (std::size_t ix = 0; ix < 8; ++ix) {
    f.at(ix, 0) = static_cast<double>(ix);
    f.at(ix, 1) = static_cast<double>(10 + ix);
  }
  transport(f, 0.25);  // one cell
  for (std::size_t ix = 0; ix < 8; ++ix) {
    EXPECT_EQ(f.at(ix, 0), static_cast<double>((ix + 1) % 8));
    EXPECT_EQ(f.at(ix, 1), static_cast<double>(10 + (ix + 7) % 8));
  }
}

TEST(Transport, PreservesConstantsAndMass) {
  GridDensity c(GridSpec{16, 4, 1.0}, 0.0, std::vector<double>(64, 0.5));
  transport(c, 0.123);
  for (double v : c.values()) EXPECT_NEAR(v, 0.5, 1e-15);
  auto f = discretize(cosine_law(), GridSpec{64, 8, 1.0});
  transport(f, 0.377);
  EXPECT_NEAR(f.total_mass(), 1.0, 1e-13);
}

TEST(Step, SpatiallyUniformStateIsStationary) {
  const auto f0 = discretize(InitialLaw{}, GridSpec{64, 8, 1.0});
  auto f = f0;
  for (int k = 0; k < 20; ++k) step(f, Kernel::linear(), 0.05);
  EXPECT_LE(l1(f, f0), 1e-12);
  EXPECT_NEAR(f.time(), 1.0, 1e-12);
}

TEST(Step, ZeroVelocityUniformKernelIsStationary) {
  const auto f0 = discretize(cosine_law(), GridSpec{64, 1, 1.0});
  auto f = f0;
  for (int k = 0; k < 10; ++k) step(f, Kernel::uniform(), 0.1);
  EXPECT_LE(l1(f, f0), 1e-13);
}

TEST(Step, PerStepMassDriftBelowTolerance) {
  auto f = discretize(cosine_law(), GridSpec{512, 4, 1.0});
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto r = step(f, Kernel::linear(), 0.01);
    worst = std::max(worst, std::abs(r.mass_before_renormalization - 1.0));
  }
  EXPECT_LE(worst, 1e-7);
  EXPECT_NEAR(f.total_mass(), 1.0, 1e-12);
}

TEST(Step, RejectsBadInput) {
  auto f = discretize(cosine_law(), GridSpec{16, 2, 1.0});
  EXPECT_THROW(step(f, Kernel::linear(), 1.5), ValidationError);
  EXPECT_THROW(step(f, Kernel::linear(), 0.0), ValidationError);
  f.at(2, 1) = -1.0;
  EXPECT_THROW(step(f, Kernel::linear(), 0.01), SolverInstability);
}

TEST(Solve, LandsOnSnapshotTimes) {
  const auto f0 = discretize(cosine_law(), GridSpec{32, 4, 1.0});
  const std::vector<double> times{0.0, 0.07, 0.5};
  const auto sol = solve(f0, Kernel::linear(), 0.5, 0.02, times);
  ASSERT_EQ(sol.snapshots.size(), 3u);
  EXPECT_EQ(sol.snapshots[0].values(), f0.values());
  EXPECT_EQ(sol.snapshots[1].time(), 0.07);
  EXPECT_EQ(sol.snapshots[2].time(), 0.5);
  EXPECT_EQ(sol.steps.size(), 4u + 22u);
  const std::vector<double> bad{0.6};
  EXPECT_THROW(solve(f0, Kernel::linear(), 0.5, 0.02, bad), ValidationError);
}

TEST(Solve, ThreadCountDoesNotChangeResult) {
  const auto f0 = discretize(cosine_law(), GridSpec{64, 4, 1.0});
  const std::vector<double> times{0.2};
  const auto a = solve(f0, Kernel::linear(), 0.2, 0.05, times, 1);
  const auto b = solve(f0, Kernel::linear(), 0.2, 0.05, times, 3);
  EXPECT_EQ(a.snapshots[0].values(), b.snapshots[0].values());
}

TEST(Solve, TimeStepSelfConvergence) {
  // Fine x-grid: the interpolation error of the transport grows like 1/dt
  // and would otherwise mask the splitting error.
  const auto f0 = discretize(cosine_law(), GridSpec{640, 8, 1.0});
  const std::vector<double> times{0.5};
  std::vector<GridDensity> ends;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) ends.push_back(solve(f0, Kernel::linear(), 0.5, dt, times).snapshots[0]);
  const double e1 = l1(ends[0], ends[1]);
  const double e2 = l1(ends[1], ends[2]);
  const double e3 = l1(ends[2], ends[3]);
  EXPECT_GE(e1 / e2, 1.7);
  EXPECT_LE(e1 / e2, 4.3);
  EXPECT_GE(e2 / e3, 1.7);
  EXPECT_LE(e2 / e3, 4.3);
}

TEST(GridIo, BinaryRoundTrip) {
  auto f = discretize(cosine_law(), GridSpec{8, 4, 1.5});
  f.set_time(0.25);
  std::stringstream s;
  write_binary(s, f);
  const auto back = read_binary(s);
  EXPECT_EQ(back.values(), f.values());
  EXPECT_EQ(back.time(), 0.25);
  EXPECT_EQ(back.spec().v_max, 1.5);
}

TEST(GridIo, CsvRoundTripIsExact) {
  auto f = discretize(cosine_law(), GridSpec{8, 4, 1.0});
  f.set_time(1.0 / 3.0);
  std::stringstream s;
  write_csv(s, f);
  const auto back = read_csv(s);
  EXPECT_EQ(back.values(), f.values());
  EXPECT_EQ(back.time(), f.time());
}

TEST(GridIo, BadHeadersRejected) {
  std::stringstream magic("XXXX");
  EXPECT_THROW(read_binary(magic), SchemaError);
  std::stringstream version;
  version.write("TLGD", 4);
  const std::uint32_t v = 2;
  version.write(reinterpret_cast<const char*>(&v), 4);
  EXPECT_THROW(read_binary(version), SchemaError);
  std::stringstream csv("nx,nv,v_max,t\n1,1,1,0\n1\n");
  EXPECT_THROW(read_csv(csv), SchemaError);
  std::stringstream future("# topolab grid v2\nnx,nv,v_max,t\n1,1,1,0\n1\n");
  EXPECT_THROW(read_csv(future), SchemaError);
}

TEST(GridIo, SnapshotFileName) { EXPECT_EQ(snapshot_file_name(0.5, "bin"), "f_t0.500000.bin"); }
