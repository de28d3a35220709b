#include "repulsion/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

constexpr double kPi = std::numbers::pi;

double parse_double(std::string_view s, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidInput("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return value;
}

// Minkowski squared norm of x - y; equals 4 K^2 sinh^2(d / 2K) for points on
// the hyperboloid. Clamped at zero against rounding.
double hyperbolic_chord_sq(const Point& x, const Point& y) {
  const Eigen::VectorXd diff = x - y;
  return std::max(0.0, minkowski_dot(diff, diff));
}

}  // namespace

Manifold Manifold::euclidean(int dim) {
  if (dim < 1) throw InvalidInput("manifold dimension must be >= 1");
  return {ManifoldKind::euclidean, dim, 1.0};
}

Manifold Manifold::sphere(int dim) {
  if (dim < 1) throw InvalidInput("manifold dimension must be >= 1");
  return {ManifoldKind::sphere, dim, 1.0};
}

Manifold Manifold::hyperbolic(int dim, double K) {
  if (dim < 1) throw InvalidInput("manifold dimension must be >= 1");
  if (!(K > 0.0) || !std::isfinite(K)) throw InvalidInput("hyperbolic curvature scale K must be > 0");
  return {ManifoldKind::hyperbolic, dim, K};
}

Manifold Manifold::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidInput("manifold spec '" + std::string(spec) + "' must look like kind:dim");
  }
  const std::string_view kind = spec.substr(0, colon);
  std::string_view rest = spec.substr(colon + 1);
  std::string_view dim_str = rest;
  std::string_view k_str;
  if (const auto c2 = rest.find(':'); c2 != std::string_view::npos) {
    dim_str = rest.substr(0, c2);
    k_str = rest.substr(c2 + 1);
    if (k_str.starts_with("K=")) k_str.remove_prefix(2);
  }
  int dim = 0;
  auto [ptr, ec] = std::from_chars(dim_str.data(), dim_str.data() + dim_str.size(), dim);
  if (ec != std::errc() || ptr != dim_str.data() + dim_str.size()) {
    throw InvalidInput("bad manifold dimension in '" + std::string(spec) + "'");
  }
  if (kind == "euclidean" || kind == "R") {
    if (!k_str.empty()) throw InvalidInput("curvature scale only applies to hyperbolic space");
    return euclidean(dim);
  }
  if (kind == "sphere" || kind == "S") {
    if (!k_str.empty()) throw InvalidInput("curvature scale only applies to hyperbolic space");
    return sphere(dim);
  }
  if (kind == "hyperbolic" || kind == "H") {
    return hyperbolic(dim, k_str.empty() ? 1.0 : parse_double(k_str, "curvature scale"));
  }
  throw InvalidInput("unknown manifold kind '" + std::string(kind) + "'");
}

std::string Manifold::to_string() const {
  switch (kind) {
    case ManifoldKind::euclidean:
      return "euclidean:" + std::to_string(dim);
    case ManifoldKind::sphere:
      return "sphere:" + std::to_string(dim);
    case ManifoldKind::hyperbolic: {
      std::ostringstream os;
      os.precision(17);
      os << "hyperbolic:" << dim << ":K=" << curvature_scale;
      return os.str();
    }
  }
  return {};
}

double Manifold::sectional_curvature() const {
  switch (kind) {
    case ManifoldKind::euclidean:
      return 0.0;
    case ManifoldKind::sphere:
      return 1.0;
    case ManifoldKind::hyperbolic:
      return -1.0 / (curvature_scale * curvature_scale);
  }
  return 0.0;
}

double Manifold::injectivity_radius() const {
  return kind == ManifoldKind::sphere ? kPi : std::numeric_limits<double>::infinity();
}

double minkowski_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return -u[0] * v[0] + u.tail(u.size() - 1).dot(v.tail(v.size() - 1));
}

bool is_valid_point(const Manifold& M, const Point& x) {
  if (x.size() != M.ambient_dim() || !x.allFinite()) return false;
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return true;
    case ManifoldKind::sphere:
      return std::abs(x.norm() - 1.0) <= kSphereNormTol;
    case ManifoldKind::hyperbolic: {
      const double K2 = M.curvature_scale * M.curvature_scale;
      return x[0] > 0.0 && std::abs(minkowski_dot(x, x) + K2) <= kHyperbolicNormTol * K2;
    }
  }
  return false;
}

void validate_point(const Manifold& M, const Point& x) {
  if (x.size() != M.ambient_dim()) {
    throw InvalidInput("point has " + std::to_string(x.size()) + " coordinates, " +
                       M.to_string() + " needs " + std::to_string(M.ambient_dim()));
  }
  if (!is_valid_point(M, x)) {
    throw InvalidInput("point violates the representation constraint of " + M.to_string());
  }
}

void validate_tangent(const Manifold& M, const Point& x, const Tangent& v) {
  if (v.size() != M.ambient_dim() || !v.allFinite()) {
    throw InvalidInput("tangent vector has wrong size or non-finite entries");
  }
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return;
    case ManifoldKind::sphere:
      if (std::abs(x.dot(v)) > kSphereTangentTol * std::max(1.0, v.norm())) {
        throw InvalidInput("vector is not tangent to the sphere at its base point");
      }
      return;
    case ManifoldKind::hyperbolic:
      if (std::abs(minkowski_dot(x, v)) >
          kHyperbolicTangentTol * std::max(1.0, v.norm()) * std::max(1.0, x.norm())) {
        throw InvalidInput("vector is not tangent to the hyperboloid at its base point");
      }
      return;
  }
}

double inner(const Manifold& M, const Point&, const Tangent& u, const Tangent& v) {
  return M.kind == ManifoldKind::hyperbolic ? minkowski_dot(u, v) : u.dot(v);
}

double tangent_norm(const Manifold& M, const Point& x, const Tangent& v) {
  return std::sqrt(std::max(0.0, inner(M, x, v, v)));
}

Point project_point(const Manifold& M, const Point& x) {
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return x;
    case ManifoldKind::sphere:
      return x / x.norm();
    case ManifoldKind::hyperbolic: {
      Point p = x;
      const double K = M.curvature_scale;
      p[0] = std::sqrt(K * K + x.tail(x.size() - 1).squaredNorm());
      return p;
    }
  }
  return x;
}

Tangent project_tangent(const Manifold& M, const Point& x, const Eigen::VectorXd& v) {
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return v;
    case ManifoldKind::sphere:
      return v - x.dot(v) * x;
    case ManifoldKind::hyperbolic: {
      const double K2 = M.curvature_scale * M.curvature_scale;
      return v + (minkowski_dot(x, v) / K2) * x;
    }
  }
  return v;
}

std::vector<Tangent> tangent_basis(const Manifold& M, const Point& x) {
  const int n = M.ambient_dim();
  std::vector<Tangent> basis;
  basis.reserve(M.dim);
  for (int i = 0; i < n && static_cast<int>(basis.size()) < M.dim; ++i) {
    Tangent v = project_tangent(M, x, Eigen::VectorXd::Unit(n, i));
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= inner(M, x, b, v) * b;
    }
    const double nv = tangent_norm(M, x, v);
    if (nv > 1e-6) basis.push_back(v / nv);
  }
  return basis;
}

Point base_point(const Manifold& M) {
  const int n = M.ambient_dim();
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return Point::Zero(n);
    case ManifoldKind::sphere:
      return Point::Unit(n, n - 1);
    case ManifoldKind::hyperbolic:
      return M.curvature_scale * Point::Unit(n, 0);
  }
  return Point::Zero(n);
}

double distance_unchecked(const Manifold& M, const Point& x, const Point& y) {
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return (x - y).norm();
    case ManifoldKind::sphere:
      // Equal to arccos(<x,y>) but accurate near 0 and pi.
      return 2.0 * std::atan2((x - y).norm(), (x + y).norm());
    case ManifoldKind::hyperbolic: {
      // Equal to K arcosh(-<x,y>_M / K^2), accurate for nearby points.
      const double K = M.curvature_scale;
      return 2.0 * K * std::asinh(std::sqrt(hyperbolic_chord_sq(x, y)) / (2.0 * K));
    }
  }
  return 0.0;
}

double distance(const Manifold& M, const Point& x, const Point& y) {
  validate_point(M, x);
  validate_point(M, y);
  return distance_unchecked(M, x, y);
}

namespace {

// Unnormalized direction of the geodesic from x towards y: the component of
// y - x orthogonal to x, written so that nearby points do not cancel.
Tangent raw_direction(const Manifold& M, const Point& x, const Point& y) {
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return y - x;
    case ManifoldKind::sphere: {
      const double one_minus_cos = 0.5 * (x - y).squaredNorm();
      return (y - x) + one_minus_cos * x;
    }
    case ManifoldKind::hyperbolic: {
      const double K2 = M.curvature_scale * M.curvature_scale;
      const double cosh_minus_one = hyperbolic_chord_sq(x, y) / (2.0 * K2);
      return (y - x) - cosh_minus_one * x;
    }
  }
  return y - x;
}

}  // namespace

Tangent log_map(const Manifold& M, const Point& x, const Point& y) {
  validate_point(M, x);
  validate_point(M, y);
  if (M.kind == ManifoldKind::euclidean) return y - x;
  const double d = distance_unchecked(M, x, y);
  if (M.kind == ManifoldKind::sphere && d > kPi - kAntipodalTol) {
    throw DegenerateInput("log map undefined for (nearly) antipodal sphere points");
  }
  if (d == 0.0) return Tangent::Zero(x.size());
  const Tangent u = project_tangent(M, x, raw_direction(M, x, y));
  const double nu = tangent_norm(M, x, u);
  if (nu == 0.0) return Tangent::Zero(x.size());
  return (d / nu) * u;
}

Point exp_map(const Manifold& M, const Point& x, const Tangent& v) {
  validate_point(M, x);
  validate_tangent(M, x, v);
  if (M.kind == ManifoldKind::euclidean) return x + v;
  const Tangent w = project_tangent(M, x, v);
  const double t = tangent_norm(M, x, w);
  if (t == 0.0) return x;
  if (M.kind == ManifoldKind::sphere) {
    return project_point(M, std::cos(t) * x + (std::sin(t) / t) * w);
  }
  const double K = M.curvature_scale;
  return project_point(M, std::cosh(t / K) * x + (K * std::sinh(t / K) / t) * w);
}

Point geodesic_point(const Manifold& M, const Point& x, const Point& y, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("geodesic parameter must lie in [0,1]");
  if (M.kind == ManifoldKind::euclidean) {
    validate_point(M, x);
    validate_point(M, y);
    return x + t * (y - x);
  }
  const Tangent v = log_map(M, x, y);
  if (t == 1.0) return y;
  return exp_map(M, x, t * v);
}

Tangent distance_gradient(const Manifold& M, const Point& x, const Point& y) {
  validate_point(M, x);
  validate_point(M, y);
  return distance_gradient_unchecked(M, x, y);
}

Tangent distance_gradient_unchecked(const Manifold& M, const Point& x, const Point& y) {
  const double d = distance_unchecked(M, x, y);
  if (d <= 1e-9) throw DegenerateInput("distance gradient undefined at coincident points");
  const Tangent u = project_tangent(M, x, raw_direction(M, x, y));
  const double nu = tangent_norm(M, x, u);
  if (!(nu > 1e-14)) throw DegenerateInput("distance gradient undefined at the antipode");
  return -u / nu;
}

double hyperbolic_third_side(double K, double s_a, double s_b, double angle) {
  if (!(K > 0.0)) throw InvalidInput("K must be positive");
  if (s_a < 0.0 || s_b < 0.0) throw InvalidInput("hinge sides must be nonnegative");
  // Half-angle form of the law of cosines:
  //   sinh^2(d/2K) = sinh^2((a-b)/2K) + sinh(a/K) sinh(b/K) sin^2(angle/2)
  const double half = std::sin(0.5 * angle);
  const double sd = std::sinh((s_a - s_b) / (2.0 * K));
  const double h = sd * sd + std::sinh(s_a / K) * std::sinh(s_b / K) * half * half;
  return 2.0 * K * std::asinh(std::sqrt(std::max(0.0, h)));
}

double spherical_third_side(double s_a, double s_b, double angle) {
  if (s_a < 0.0 || s_b < 0.0) throw InvalidInput("hinge sides must be nonnegative");
  // Haversine form: sin^2(d/2) = sin^2((a-b)/2) + sin a sin b sin^2(angle/2)
  const double half = std::sin(0.5 * angle);
  const double sd = std::sin(0.5 * (s_a - s_b));
  const double h = sd * sd + std::sin(s_a) * std::sin(s_b) * half * half;
  return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

double euclidean_third_side(double s_a, double s_b, double angle) {
  if (s_a < 0.0 || s_b < 0.0) throw InvalidInput("hinge sides must be nonnegative");
  const double half = std::sin(0.5 * angle);
  const double sd = s_a - s_b;
  return std::sqrt(sd * sd + 4.0 * s_a * s_b * half * half);
}

double third_side(const Manifold& M, double s_a, double s_b, double angle) {
  switch (M.kind) {
    case ManifoldKind::euclidean:
      return euclidean_third_side(s_a, s_b, angle);
    case ManifoldKind::sphere:
      return spherical_third_side(s_a, s_b, angle);
    case ManifoldKind::hyperbolic:
      return hyperbolic_third_side(M.curvature_scale, s_a, s_b, angle);
  }
  return 0.0;
}

HingeSides hinge_comparison(const Manifold& M_high, const Manifold& M_low, double s_a,
                            double s_b, double angle) {
  if (M_low.sectional_curvature() > M_high.sectional_curvature()) {
    throw InvalidInput("hinge comparison needs curvature(M_low) <= curvature(M_high)");
  }
  if (!(angle >= 0.0 && angle <= kPi)) throw InvalidInput("hinge angle must lie in [0, pi]");
  for (const Manifold* M : {&M_high, &M_low}) {
    if (M->kind == ManifoldKind::sphere && (s_a > kPi / 2 || s_b > kPi / 2)) {
      throw InvalidInput("spherical hinge sides must not exceed pi/2");
    }
  }
  return {third_side(M_high, s_a, s_b, angle), third_side(M_low, s_a, s_b, angle)};
}

Point random_point(const Manifold& M, Rng& rng, double spread) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = M.ambient_dim();
  switch (M.kind) {
    case ManifoldKind::euclidean: {
      Point p(n);
      for (int i = 0; i < n; ++i) p[i] = spread * unif(rng);
      return p;
    }
    case ManifoldKind::sphere: {
      Point p(n);
      do {
        for (int i = 0; i < n; ++i) p[i] = gauss(rng);
      } while (p.norm() < 1e-8);
      return p / p.norm();
    }
    case ManifoldKind::hyperbolic: {
      const Point o = base_point(M);
      Tangent v = Tangent::Zero(n);
      do {
        for (int i = 1; i < n; ++i) v[i] = gauss(rng);
      } while (v.norm() < 1e-8);
      std::uniform_real_distribution<double> len(0.0, spread);
      v *= len(rng) / v.norm();
      return exp_map(M, o, v);
    }
  }
  return Point::Zero(n);
}

Tangent random_tangent(const Manifold& M, const Point& x, Rng& rng, double sigma) {
  std::normal_distribution<double> gauss(0.0, sigma);
  Tangent v = Tangent::Zero(x.size());
  for (const auto& b : tangent_basis(M, x)) v += gauss(rng) * b;
  return v;
}

}  // namespace repulsion
