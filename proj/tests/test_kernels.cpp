#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "repulsion/errors.hpp"
#include "repulsion/kernels.hpp"

using namespace repulsion;
using std::numbers::pi;

namespace {

double central_difference(const Kernel& F, double t, double h = 1e-6) {
  return (F.eval(t + h) - F.eval(t - h)) / (2 * h);
}

std::vector<Kernel> analytic_kernels() {
  return {Kernel::power_law(3),         Kernel::power_law(-1),
          Kernel::power_law(1),         Kernel::power_law(0.5),
          Kernel::power_law(2.5),       Kernel::attractive_repulsive(4, 2),
          Kernel::attractive_repulsive(4, 3), Kernel::attractive_repulsive(2, -1),
          Kernel::cos_power(2),         Kernel::cos_power(3.5)};
}

Kernel table_of(const Kernel& F, double lo, double hi, int n) {
  std::vector<double> t, f;
  for (int i = 0; i < n; ++i) {
    const double s = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    t.push_back(s);
    f.push_back(F.eval(s));
  }
  return Kernel::tabulated(t, f);
}

}  // namespace

TEST(Eval, Examples) {
  EXPECT_EQ(Kernel::power_law(3).eval(2), -8.0);
  EXPECT_EQ(Kernel::attractive_repulsive(4, 2).eval(1), -0.25);
  EXPECT_EQ(Kernel::power_law(-1).eval(0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(Kernel::power_law(-1).eval(2), 0.5);
  EXPECT_EQ(Kernel::power_law(3).eval(0), 0.0);
  EXPECT_NEAR(Kernel::cos_power(2).eval(pi / 3), 0.25, 1e-15);
  EXPECT_NEAR(Kernel::cos_power(3).eval(2 * pi / 3), 0.125, 1e-15);
  EXPECT_THROW(Kernel::power_law(3).eval(-1), InvalidInput);
}

TEST(Eval, Tabulated) {
  const auto F = Kernel::tabulated({0, 1, 2}, {0, -1, -4});
  EXPECT_EQ(F.eval(0.5), -0.5);
  EXPECT_EQ(F.eval(1.5), -2.5);
  EXPECT_EQ(F.eval(2), -4);
  EXPECT_THROW(F.eval(2.5), InvalidInput);
  EXPECT_THROW(Kernel::tabulated({0, 0, 1}, {0, 1, 2}), InvalidInput);
  EXPECT_THROW(Kernel::tabulated({-1, 0}, {0, 1}), InvalidInput);
  EXPECT_THROW(F.deriv(1.0), UnsupportedOperation);
}

TEST(Eval, Continuity) {
  for (const auto& F : analytic_kernels()) {
    for (int i = 1; i <= 300; ++i) {
      const double t = 0.01 * i, h = 1e-9;
      const double lip = std::abs(F.deriv(t)) + 1.0;
      EXPECT_LE(std::abs(F.eval(t + h) - F.eval(t)), 2 * lip * h + 1e-15) << F.to_string() << " t=" << t;
    }
  }
}

TEST(Deriv, Examples) {
  EXPECT_EQ(Kernel::power_law(3).deriv(1), -3.0);
  EXPECT_EQ(Kernel::attractive_repulsive(4, 2).deriv(1), 0.0);
  EXPECT_NEAR(Kernel::cos_power(2).deriv(pi / 4), -1.0, 1e-15);
}

TEST(Deriv, MatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (const auto& F : analytic_kernels()) {
    for (int i = 0; i < 100; ++i) {
      const double t = u(rng);
      const double d = F.deriv(t), fd = central_difference(F, t);
      EXPECT_LE(std::abs(d - fd), 1e-6 * std::max(1.0, std::abs(d))) << F.to_string() << " t=" << t;
    }
  }
}

TEST(Classify, Examples) {
  const auto p3 = Kernel::power_law(3).classify();
  EXPECT_EQ(p3.kind, RepulsionKind::weakly_repulsive);
  EXPECT_EQ(p3.C, 1.0);
  EXPECT_EQ(p3.alpha, 3.0);
  const auto pm1 = Kernel::power_law(-1).classify();
  EXPECT_EQ(pm1.kind, RepulsionKind::strongly_repulsive);
  EXPECT_EQ(pm1.alpha, -1.0);
  EXPECT_EQ(Kernel::power_law(1).classify().kind, RepulsionKind::other);
  EXPECT_EQ(Kernel::power_law(2).classify().kind, RepulsionKind::other);
  const auto ar = Kernel::attractive_repulsive(4, 3).classify();
  EXPECT_EQ(ar.kind, RepulsionKind::weakly_repulsive);
  EXPECT_EQ(ar.alpha, 3.0);
  EXPECT_NEAR(ar.C, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(Kernel::attractive_repulsive(4, 2).classify().kind, RepulsionKind::other);
  EXPECT_EQ(Kernel::attractive_repulsive(2, -1).classify().kind, RepulsionKind::strongly_repulsive);
}

TEST(Classify, DecreasingRadius) {
  EXPECT_NEAR(Kernel::attractive_repulsive(4, 3).classify().decreasing_radius, 1.0, 2e-3);
  EXPECT_NEAR(Kernel::attractive_repulsive(4, 2).classify().decreasing_radius, 1.0, 2e-3);
  EXPECT_GE(Kernel::power_law(3).classify().decreasing_radius, 100.0);
  EXPECT_NEAR(Kernel::cos_power(2).classify().decreasing_radius, pi / 2, 2e-3);
}

TEST(Classify, TabulatedFitRecoversCubic) {
  const auto T = table_of(Kernel::power_law(3), 1e-3, 0.1, 40);
  const auto c = T.classify();
  EXPECT_EQ(c.kind, RepulsionKind::weakly_repulsive);
  EXPECT_NEAR(c.alpha, 3.0, 1e-3);
  EXPECT_NEAR(c.C, 1.0, 1e-3);
}

TEST(Classify, TabulatedAgreesWithAnalytic) {
  for (const auto& F : {Kernel::power_law(3), Kernel::power_law(-1), Kernel::power_law(2.5),
                        Kernel::attractive_repulsive(4, 3), Kernel::power_law(1)}) {
    EXPECT_EQ(table_of(F, 1e-4, 0.5, 200).classify().kind, F.classify().kind) << F.to_string();
  }
}

TEST(Classify, TabulatedSignChangeIsOther) {
  std::vector<double> t, f;
  for (int i = 0; i < 20; ++i) {
    t.push_back(1e-3 + 0.005 * i);
    f.push_back(i % 2 ? 1.0 : -1.0);
  }
  EXPECT_EQ(Kernel::tabulated(t, f).classify().kind, RepulsionKind::other);
}

TEST(Classify, TabulatedNeedsEnoughSamples) {
  EXPECT_THROW(Kernel::tabulated({0.001, 0.01, 0.05}, {-1e-9, -1e-6, -1.25e-4}).classify(), InvalidInput);
}

TEST(Parse, Specs) {
  EXPECT_EQ(Kernel::parse("power:delta=3").eval(2), -8.0);
  EXPECT_EQ(Kernel::parse("attrep:alpha=4,beta=2").eval(1), -0.25);
  EXPECT_NEAR(Kernel::parse("cospow:p=2").eval(pi / 3), 0.25, 1e-15);
  EXPECT_EQ(Kernel::parse(Kernel::power_law(-1).to_string()).eval(2), 0.5);
  EXPECT_THROW(Kernel::parse("power:delta=0"), InvalidInput);
  EXPECT_THROW(Kernel::parse("power:gamma=3"), InvalidInput);
  EXPECT_THROW(Kernel::parse("power"), InvalidInput);
  EXPECT_THROW(Kernel::parse("attrep:alpha=2,beta=4"), InvalidInput);
  EXPECT_THROW(Kernel::parse("gauss:s=1"), InvalidInput);
  EXPECT_THROW(Kernel::parse("cospow:p=-1"), InvalidInput);
}

TEST(Parse, TableFile) {
  const auto path = std::filesystem::temp_directory_path() / "repulsion_kernel_table.csv";
  {
    std::ofstream out(path);
    out << "t,F\n0,0\n1,-1\n2,-8\n";
  }
  const auto F = Kernel::parse("table:path=" + path.string());
  EXPECT_EQ(F.eval(1.5), -4.5);
  EXPECT_FALSE(F.is_analytic());
  std::filesystem::remove(path);
  EXPECT_THROW(Kernel::parse("table:path=/nonexistent/file.csv"), InvalidInput);
}

TEST(AttractiveRepulsive, ShapeAroundCriticalPoint) {
  const auto F = Kernel::attractive_repulsive(4, 2);
  for (double t = 0.05; t < 1.0; t += 0.05) EXPECT_LT(F.deriv(t), 0.0);
  for (double t = 1.05; t < 3.0; t += 0.05) EXPECT_GT(F.deriv(t), 0.0);
  EXPECT_LT(F.eval(1.0), 0.0);
  EXPECT_GT(F.eval(2.0), 0.0);
}
