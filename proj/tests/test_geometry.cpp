#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "repulsion/errors.hpp"
#include "repulsion/geometry.hpp"

using namespace repulsion;
using std::numbers::pi;

namespace {

Point vec(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

const Manifold kR2 = Manifold::euclidean(2);
const Manifold kS2 = Manifold::sphere(2);
const Manifold kH2 = Manifold::hyperbolic(2, 1.0);

std::vector<Manifold> all_manifolds() {
  return {Manifold::euclidean(3), Manifold::sphere(1), kS2, Manifold::sphere(3), kH2,
          Manifold::hyperbolic(3, 0.5), Manifold::hyperbolic(2, 4.0)};
}

}  // namespace

TEST(Manifold, ParseAndPrint) {
  EXPECT_EQ(Manifold::parse("sphere:2"), kS2);
  EXPECT_EQ(Manifold::parse("euclidean:2"), kR2);
  EXPECT_EQ(Manifold::parse("hyperbolic:2:K=0.5"), Manifold::hyperbolic(2, 0.5));
  EXPECT_EQ(Manifold::parse(Manifold::hyperbolic(3, 2.5).to_string()), Manifold::hyperbolic(3, 2.5));
  EXPECT_THROW(Manifold::parse("torus:2"), InvalidInput);
  EXPECT_THROW(Manifold::parse("sphere:0"), InvalidInput);
  EXPECT_THROW(Manifold::parse("hyperbolic:2:K=-1"), InvalidInput);
  EXPECT_EQ(kS2.sectional_curvature(), 1.0);
  EXPECT_EQ(Manifold::hyperbolic(2, 2.0).sectional_curvature(), -0.25);
}

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance(kR2, vec({0, 0}), vec({3, 4})), 5.0);
  EXPECT_NEAR(distance(kS2, vec({0, 0, 1}), vec({1, 0, 0})), pi / 2, 1e-15);
  EXPECT_NEAR(distance(kS2, vec({0, 0, 1}), vec({0, 0, -1})), pi, 1e-15);
  EXPECT_NEAR(distance(kH2, vec({1, 0, 0}), vec({std::cosh(1.0), std::sinh(1.0), 0})), 1.0, 1e-12);
}

TEST(Distance, RejectsInvalidPoints) {
  EXPECT_THROW(distance(kS2, vec({0, 0, 1.001}), vec({1, 0, 0})), InvalidInput);
  EXPECT_THROW(distance(kH2, vec({1, 0.5, 0}), vec({1, 0, 0})), InvalidInput);
  EXPECT_THROW(distance(kH2, vec({-1, 0, 0}), vec({1, 0, 0})), InvalidInput);
  EXPECT_THROW(distance(kR2, vec({0, 0, 0}), vec({1, 0})), InvalidInput);
}

TEST(Distance, MetricAxioms) {
  Rng rng(11);
  for (const auto& M : all_manifolds()) {
    for (int i = 0; i < 1000; ++i) {
      const auto x = random_point(M, rng), y = random_point(M, rng), z = random_point(M, rng);
      EXPECT_EQ(distance(M, x, y), distance(M, y, x));
      EXPECT_GE(distance(M, x, z) + distance(M, z, y) - distance(M, x, y), -1e-12);
      EXPECT_EQ(distance(M, x, x), 0.0);
    }
  }
}

TEST(LogMap, Examples) {
  const auto v = log_map(kS2, vec({0, 0, 1}), vec({1, 0, 0}));
  EXPECT_NEAR((v - vec({pi / 2, 0, 0})).norm(), 0.0, 1e-15);
  EXPECT_EQ(log_map(kR2, vec({1, 2}), vec({4, -1})), vec({3, -3}));
  for (const auto& M : all_manifolds()) {
    Rng rng(3);
    const auto x = random_point(M, rng);
    EXPECT_EQ(log_map(M, x, x).norm(), 0.0);
  }
  EXPECT_THROW(log_map(kS2, vec({0, 0, 1}), vec({0, 0, -1})), DegenerateInput);
}

TEST(ExpMap, Examples) {
  EXPECT_NEAR((exp_map(kS2, vec({0, 0, 1}), vec({pi, 0, 0})) - vec({0, 0, -1})).norm(), 0.0, 1e-15);
  EXPECT_EQ(exp_map(kR2, vec({1, 1}), vec({2, 0})), vec({3, 1}));
  EXPECT_THROW(exp_map(kS2, vec({0, 0, 1}), vec({0, 0, 1})), InvalidInput);
}

TEST(ExpLog, RoundTripAndNorm) {
  Rng rng(5);
  for (const auto& M : all_manifolds()) {
    for (int i = 0; i < 1000; ++i) {
      const auto x = random_point(M, rng), y = random_point(M, rng);
      if (M.kind == ManifoldKind::sphere && distance(M, x, y) > pi - 1e-3) continue;
      const auto v = log_map(M, x, y);
      EXPECT_NEAR(tangent_norm(M, x, v), distance(M, x, y), 1e-9);
      const auto y2 = exp_map(M, x, v);
      EXPECT_LT(distance(M, y, y2), 1e-9);
      EXPECT_TRUE(is_valid_point(M, y2));
    }
  }
}

TEST(ExpMap, DistanceEqualsTangentLength) {
  Rng rng(8);
  for (const auto& M : all_manifolds()) {
    for (int i = 0; i < 200; ++i) {
      const auto x = random_point(M, rng);
      auto v = random_tangent(M, x, rng);
      if (M.kind == ManifoldKind::sphere) {
        const double n = tangent_norm(M, x, v);
        if (n > pi) v *= (pi - 1e-3) / n;
      }
      EXPECT_NEAR(distance(M, x, exp_map(M, x, v)), tangent_norm(M, x, v), 1e-9);
    }
  }
}

TEST(Geodesic, Examples) {
  EXPECT_EQ(geodesic_point(kR2, vec({0, 0}), vec({2, 0}), 0.25), vec({0.5, 0}));
  const double h = std::sqrt(2.0) / 2;
  EXPECT_NEAR((geodesic_point(kS2, vec({0, 0, 1}), vec({1, 0, 0}), 0.5) - vec({h, 0, h})).norm(), 0, 1e-15);
  Rng rng(9);
  for (const auto& M : all_manifolds()) {
    const auto x = random_point(M, rng), y = random_point(M, rng);
    EXPECT_LT(distance(M, geodesic_point(M, x, y, 0.0), x), 1e-12);
    EXPECT_LT(distance(M, geodesic_point(M, x, y, 1.0), y), 1e-9);
  }
  EXPECT_THROW(geodesic_point(kS2, vec({0, 0, 1}), vec({0, 0, -1}), 0.5), DegenerateInput);
}

TEST(Geodesic, Additivity) {
  Rng rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& M : all_manifolds()) {
    for (int i = 0; i < 200; ++i) {
      const auto x = random_point(M, rng), y = random_point(M, rng);
      if (M.kind == ManifoldKind::sphere && distance(M, x, y) > pi - 1e-3) continue;
      const double d = distance(M, x, y), t1 = u(rng), t2 = u(rng);
      const auto g1 = geodesic_point(M, x, y, t1), g2 = geodesic_point(M, x, y, t2);
      EXPECT_NEAR(distance(M, x, g1), t1 * d, 1e-9);
      EXPECT_NEAR(distance(M, g1, y), (1 - t1) * d, 1e-9);
      EXPECT_NEAR(distance(M, g1, g2), std::abs(t2 - t1) * d, 1e-9);
    }
  }
}

TEST(DistanceGradient, Examples) {
  EXPECT_NEAR((distance_gradient(kR2, vec({1, 0}), vec({0, 0})) - vec({1, 0})).norm(), 0, 1e-15);
  EXPECT_NEAR((distance_gradient(kS2, vec({0, 0, 1}), vec({1, 0, 0})) - vec({-1, 0, 0})).norm(), 0, 1e-15);
  EXPECT_THROW(distance_gradient(kS2, vec({0, 0, 1}), vec({0, 0, 1})), DegenerateInput);
}

TEST(DistanceGradient, UnitAndLogIdentity) {
  Rng rng(12);
  for (const auto& M : all_manifolds()) {
    for (int i = 0; i < 200; ++i) {
      const auto x = random_point(M, rng), y = random_point(M, rng);
      if (M.kind == ManifoldKind::sphere && distance(M, x, y) > pi - 1e-3) continue;
      const auto g = distance_gradient(M, x, y);
      EXPECT_NEAR(tangent_norm(M, x, g), 1.0, 1e-9);
      EXPECT_NEAR(inner(M, x, g, log_map(M, x, y)), -distance(M, x, y), 1e-8);
      // directional derivative along -g is -1
      const double h = 1e-6;
      const double fd = (distance(M, exp_map(M, x, -h * g), y) - distance(M, exp_map(M, x, h * g), y)) / (2 * h);
      EXPECT_NEAR(fd, -1.0, 1e-6);
    }
  }
}

TEST(ThirdSide, HyperbolicIdentities) {
  for (double K : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(hyperbolic_third_side(K, 0.7, 1.3, pi), 2.0, 1e-10);
    EXPECT_NEAR(hyperbolic_third_side(K, 0.7, 1.3, 0.0), 0.6, 1e-10);
    // law of cosines holds as stated
    const double d = hyperbolic_third_side(K, 0.7, 1.3, 1.1);
    EXPECT_NEAR(std::cosh(d / K),
                std::cosh(0.7 / K) * std::cosh(1.3 / K) - std::sinh(0.7 / K) * std::sinh(1.3 / K) * std::cos(1.1),
                1e-12 * std::cosh(d / K));
  }
  EXPECT_NEAR(hyperbolic_third_side(1000.0, 1.0, 1.0, pi / 3), 1.0, 1e-4);
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double d = hyperbolic_third_side(1.0, 0.4, 0.9, pi * k / 100);
    EXPECT_GE(d, prev);
    prev = d;
  }
}

TEST(ThirdSide, MatchesActualTriangles) {
  Rng rng(13);
  for (const auto& M : {kS2, kH2, Manifold::hyperbolic(2, 0.3), kR2}) {
    for (int i = 0; i < 100; ++i) {
      const auto x = random_point(M, rng, 0.5), y = random_point(M, rng, 0.5), z = random_point(M, rng, 0.5);
      const auto u = log_map(M, x, y), v = log_map(M, x, z);
      const double a = tangent_norm(M, x, u), b = tangent_norm(M, x, v);
      const double c = std::clamp(inner(M, x, u, v) / (a * b), -1.0, 1.0);
      EXPECT_NEAR(third_side(M, a, b, std::acos(c)), distance(M, y, z), 1e-7);
    }
  }
}

TEST(Hinge, Examples) {
  const auto sr = hinge_comparison(kS2, kR2, 0.5, 0.5, pi / 2);
  EXPECT_NEAR(sr.low, std::sqrt(0.5), 1e-15);
  EXPECT_LE(sr.high, sr.low);
  const auto rh = hinge_comparison(kR2, kH2, 1.0, 1.0, pi / 2);
  EXPECT_NEAR(rh.high, std::sqrt(2.0), 1e-15);
  EXPECT_LE(rh.high, rh.low);
  const auto flat = hinge_comparison(kS2, kH2, 0.3, 1.2, 0.0);
  EXPECT_NEAR(flat.high, 0.9, 1e-12);
  EXPECT_NEAR(flat.low, 0.9, 1e-12);
  EXPECT_THROW(hinge_comparison(kH2, kS2, 0.5, 0.5, 1.0), InvalidInput);
  EXPECT_THROW(hinge_comparison(kS2, kR2, 2.0, 0.5, 1.0), InvalidInput);
  EXPECT_THROW(hinge_comparison(kS2, kR2, 0.5, 0.5, 4.0), InvalidInput);
}

TEST(Hinge, MonotoneInCurvature) {
  Rng rng(14);
  std::uniform_real_distribution<double> side(0.0, pi / 2), ang(0.0, pi);
  for (int i = 0; i < 500; ++i) {
    const double a = side(rng), b = side(rng), t = ang(rng);
    const double s = spherical_third_side(a, b, t), e = euclidean_third_side(a, b, t);
    const double h = hyperbolic_third_side(1.0, a, b, t), h2 = hyperbolic_third_side(0.5, a, b, t);
    EXPECT_LE(s, e + 1e-10);
    EXPECT_LE(e, h + 1e-10);
    EXPECT_LE(h, h2 + 1e-10);
  }
}
