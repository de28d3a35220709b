#pragma once

// Closed-form metric geometry of the three model spaces: Euclidean space,
// the unit sphere and hyperbolic space of curvature -1/K^2.
//
// Representations:
//   euclidean   point in R^d
//   sphere      unit vector in R^{d+1}
//   hyperbolic  hyperboloid vector in R^{d+1} with <x,x>_M = -K^2, x_0 > 0,
//               where <u,v>_M = -u_0 v_0 + sum_i u_i v_i
// Tangent vectors use the same ambient coordinates as their base point.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace repulsion {

using Point = Eigen::VectorXd;
using Tangent = Eigen::VectorXd;
using Rng = std::mt19937_64;

enum class ManifoldKind { euclidean, sphere, hyperbolic };

struct Manifold {
  ManifoldKind kind = ManifoldKind::euclidean;
  int dim = 1;
  double curvature_scale = 1.0;  // K, hyperbolic only

  static Manifold euclidean(int dim);
  static Manifold sphere(int dim);
  static Manifold hyperbolic(int dim, double K);

  /// Parses "euclidean:2", "sphere:2" or "hyperbolic:2" / "hyperbolic:2:K=0.5".
  static Manifold parse(std::string_view spec);
  std::string to_string() const;

  int ambient_dim() const { return kind == ManifoldKind::euclidean ? dim : dim + 1; }
  double sectional_curvature() const;
  /// Infinity except on the sphere, where it is pi.
  double injectivity_radius() const;

  bool operator==(const Manifold&) const = default;
};

inline constexpr double kSphereNormTol = 1e-12;
inline constexpr double kHyperbolicNormTol = 1e-9;
inline constexpr double kSphereTangentTol = 1e-10;
inline constexpr double kHyperbolicTangentTol = 1e-9;
/// Sphere pairs closer than this to antipodal have no unique log map.
inline constexpr double kAntipodalTol = 1e-6;

double minkowski_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Throws InvalidInput unless x satisfies the representation constraints of M.
void validate_point(const Manifold& M, const Point& x);
bool is_valid_point(const Manifold& M, const Point& x);
void validate_tangent(const Manifold& M, const Point& x, const Tangent& v);

/// Riemannian inner product on T_x M (Minkowski form for hyperbolic).
double inner(const Manifold& M, const Point& x, const Tangent& u, const Tangent& v);
double tangent_norm(const Manifold& M, const Point& x, const Tangent& v);

/// Projects an ambient vector back onto the manifold / the tangent space at x.
Point project_point(const Manifold& M, const Point& x);
Tangent project_tangent(const Manifold& M, const Point& x, const Eigen::VectorXd& v);

/// Orthonormal basis of T_x M (dim vectors).
std::vector<Tangent> tangent_basis(const Manifold& M, const Point& x);

/// Canonical base point: origin, north pole (0,..,0,1), or (K,0,..,0).
Point base_point(const Manifold& M);

double distance(const Manifold& M, const Point& x, const Point& y);
/// Same formula without representation checks; for inner loops over
/// already validated points.
double distance_unchecked(const Manifold& M, const Point& x, const Point& y);

Tangent log_map(const Manifold& M, const Point& x, const Point& y);
Point exp_map(const Manifold& M, const Point& x, const Tangent& v);
Point geodesic_point(const Manifold& M, const Point& x, const Point& y, double t);

/// Riemannian gradient of distance(., y) at x, a unit tangent vector equal to
/// -log_map(x, y) / distance(x, y). Sphere pairs are accepted up to (but not
/// at) the antipode since the direction stays well defined there.
Tangent distance_gradient(const Manifold& M, const Point& x, const Point& y);
/// distance_gradient without representation checks.
Tangent distance_gradient_unchecked(const Manifold& M, const Point& x, const Point& y);

/// Third side of a hinge with sides s_a, s_b and included angle, in the
/// hyperbolic space of curvature -1/K^2.
double hyperbolic_third_side(double K, double s_a, double s_b, double angle);
double spherical_third_side(double s_a, double s_b, double angle);
double euclidean_third_side(double s_a, double s_b, double angle);
double third_side(const Manifold& M, double s_a, double s_b, double angle);

struct HingeSides {
  double high;  // third side in the space of higher curvature
  double low;   // third side in the space of lower curvature
};

/// Evaluates the same hinge in two model spaces. Requires
/// curvature(M_low) <= curvature(M_high); then low >= high.
HingeSides hinge_comparison(const Manifold& M_high, const Manifold& M_low, double s_a,
                            double s_b, double angle);

/// Random point. Euclidean: uniform in the cube [-spread, spread]^d;
/// sphere: uniform; hyperbolic: exp of a uniform-direction tangent vector at
/// the base point with length uniform in [0, spread].
Point random_point(const Manifold& M, Rng& rng, double spread = 1.0);
/// Isotropic Gaussian tangent vector at x with per-coordinate deviation sigma.
Tangent random_tangent(const Manifold& M, const Point& x, Rng& rng, double sigma = 1.0);

}  // namespace repulsion
