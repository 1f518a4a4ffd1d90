#include "topolab/errors.hpp"
#include "topolab/kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace topolab;

TEST(Kernel, LinearValues) {
  const auto k = Kernel::linear();
  EXPECT_EQ(k(0.0), 2.0);
  EXPECT_EQ(k(0.5), 1.0);
  EXPECT_EQ(k(1.0), 0.0);
  EXPECT_EQ(k.lipschitz(), 2.0);
  EXPECT_EQ(k.integral(), 1.0);
}

TEST(Kernel, UniformIsOne) {
  const auto k = Kernel::uniform();
  for (double r : {0.0, 0.3, 1.0}) EXPECT_EQ(k(r), 1.0);
  EXPECT_EQ(k.lipschitz(), 0.0);
}

TEST(Kernel, TruncatedLinear) {
  const auto k = Kernel::truncated_linear(0.5);
  EXPECT_EQ(k(0.0), 4.0);
  EXPECT_EQ(k(0.25), 2.0);
  EXPECT_EQ(k(0.5), 0.0);
  EXPECT_EQ(k(0.9), 0.0);
  EXPECT_EQ(k.lipschitz(), 8.0);
  EXPECT_THROW(Kernel::truncated_linear(0.0), ValidationError);
  EXPECT_THROW(Kernel::truncated_linear(1.5), ValidationError);
}

TEST(Kernel, ArgumentClampedToUnitInterval) {
  const auto k = Kernel::linear();
  EXPECT_EQ(k(-0.1), 2.0);
  EXPECT_EQ(k(1.1), 0.0);
}

TEST(Kernel, TabulatedInterpolates) {
  const auto k = Kernel::tabulated({{0.0, 1.5}, {0.5, 1.0}, {1.0, 0.5}});
  EXPECT_NEAR(k(0.25), 1.25, 1e-15);
  EXPECT_NEAR(k(0.75), 0.75, 1e-15);
  EXPECT_NEAR(k.integral(), 1.0, 1e-15);
  EXPECT_NEAR(k.lipschitz(), 1.0, 1e-12);
}

TEST(Kernel, TabulatedRejectsBadTables) {
  EXPECT_THROW(Kernel::tabulated({{0.0, 1.0}, {0.9, 1.0}}), ValidationError);
  EXPECT_THROW(Kernel::tabulated({{0.0, 0.5}, {1.0, 1.5}}), ValidationError);
  EXPECT_THROW(Kernel::tabulated({{0.0, 2.5}, {0.5, -0.5}, {1.0, -0.5}}), ValidationError);
  EXPECT_THROW(Kernel::tabulated({{0.0, 2.0}, {1.0, 2.0}}), ValidationError);
  EXPECT_THROW(Kernel::tabulated({{0.0, 1.0}, {0.5, 1.0}, {0.5, 1.0}, {1.0, 1.0}}), ValidationError);
}

TEST(Kernel, JsonRoundTrip) {
  for (const auto& k : {Kernel::uniform(), Kernel::linear(), Kernel::truncated_linear(0.3),
                        Kernel::tabulated({{0.0, 1.5}, {1.0, 0.5}})}) {
    const auto back = Kernel::from_json(k.to_json());
    EXPECT_EQ(back.form(), k.form());
    for (double r : {0.0, 0.2, 0.7, 1.0}) EXPECT_EQ(back(r), k(r));
  }
  EXPECT_THROW(Kernel::from_json({{"form", "gaussian"}}), ValidationError);
}

TEST(Kernel, GrowthConstant) {
  EXPECT_NEAR(growth_constant(Kernel::linear()), 16.0 * std::sqrt(std::exp(1.0)), 1e-12);
  EXPECT_EQ(growth_constant(Kernel::uniform()), 0.0);
}

TEST(Kernel, PresetsPassValidation) {
  EXPECT_EQ(kernel_violation(Kernel::uniform()), "");
  EXPECT_EQ(kernel_violation(Kernel::linear()), "");
  EXPECT_EQ(kernel_violation(Kernel::truncated_linear(0.37)), "");
  EXPECT_EQ(kernel_violation(Kernel::tabulated({{0.0, 1.5}, {0.5, 1.0}, {1.0, 0.5}})), "");
}
