#include "repulsion/energy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <string_view>
#include <thread>

#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kParallelThreshold = 256;

void require_manifold(const Manifold& M, const DiscreteMeasure& mu) {
  if (!(M == mu.manifold())) throw InvalidInput("measure does not live on the given manifold");
}

void require_sizes(std::span<const Point> points, std::span<const double> weights) {
  if (points.size() != weights.size()) throw InvalidInput("points and weights differ in length");
}

// Runs row(i) for every i, on worker threads in fast mode.
template <class Row>
void for_rows(std::size_t n, EvalMode mode, Row&& row) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (mode == EvalMode::certified || n < kParallelThreshold || hw == 1) {
    for (std::size_t i = 0; i < n; ++i) row(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(hw, n);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) row(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

EvalMode default_eval_mode() {
  const char* env = std::getenv("REPULSION_CERTIFIED");
  return env != nullptr && std::string_view(env) == "1" ? EvalMode::certified : EvalMode::fast;
}

EnergyReport energy_report(const Manifold& M, const Kernel& F, std::span<const Point> points,
                           std::span<const double> weights, EvalMode mode) {
  require_sizes(points, weights);
  const std::size_t n = points.size();
  const bool singular = F.is_singular();
  const double self_value = singular ? 0.0 : F.eval(0.0);

  EnergyReport report;
  report.potential_at_atoms.assign(n, 0.0);
  for_rows(n, mode, [&](std::size_t i) {
    double u = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (weights[j] == 0.0) continue;
      if (j == i) {
        if (!singular) u += weights[j] * self_value;
        continue;
      }
      u += weights[j] * F.eval(distance_unchecked(M, points[i], points[j]));
    }
    report.potential_at_atoms[i] = u;
  });
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] != 0.0) value += weights[i] * report.potential_at_atoms[i];
  }
  report.value = value;
  report.pair_count = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n);
  report.singular = singular && value == kInf;
  return report;
}

EnergyReport energy_report(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                           EvalMode mode) {
  require_manifold(M, mu);
  const auto pts = mu.points();
  const auto ws = mu.weights();
  return energy_report(M, F, pts, ws, mode);
}

double energy(const Manifold& M, const Kernel& F, std::span<const Point> points,
              std::span<const double> weights, EvalMode mode) {
  return energy_report(M, F, points, weights, mode).value;
}

double energy(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu, EvalMode mode) {
  return energy_report(M, F, mu, mode).value;
}

double potential(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu, const Point& x) {
  require_manifold(M, mu);
  validate_point(M, x);
  double u = 0.0;
  for (const auto& a : mu.atoms()) {
    if (a.weight != 0.0) u += a.weight * F.eval(distance_unchecked(M, x, a.point));
  }
  return u;
}

double cross_energy(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu1,
                    const DiscreteMeasure& mu2) {
  require_manifold(M, mu1);
  require_manifold(M, mu2);
  double b = 0.0;
  for (const auto& a : mu1.atoms()) {
    if (a.weight == 0.0) continue;
    double row = 0.0;
    for (const auto& c : mu2.atoms()) {
      if (c.weight != 0.0) row += c.weight * F.eval(distance_unchecked(M, a.point, c.point));
    }
    b += a.weight * row;
  }
  return b;
}

double quadratic_form(const Manifold& M, const Kernel& F, const SignedPerturbation& nu) {
  if (!(M == nu.manifold())) throw InvalidInput("perturbation does not live on the given manifold");
  const auto& atoms = nu.atoms();
  double q = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].weight == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (atoms[j].weight == 0.0) continue;
      const double f = i == j ? F.eval(0.0) : F.eval(distance_unchecked(M, atoms[i].point, atoms[j].point));
      if (i == j && f == kInf) return kInf;
      row += atoms[j].weight * f;
    }
    q += atoms[i].weight * row;
  }
  return q;
}

std::vector<Tangent> potential_gradients(const Manifold& M, const Kernel& F,
                                         std::span<const Point> points,
                                         std::span<const double> weights, EvalMode mode,
                                         double kink_tol) {
  require_sizes(points, weights);
  if (!F.is_analytic()) throw UnsupportedOperation("gradients need an analytic kernel");
  const std::size_t n = points.size();
  const double slope_at_zero = F.deriv_at_zero();
  std::vector<Tangent> grads(n);
  std::vector<std::vector<std::pair<std::size_t, double>>> kinks(n);
  std::atomic<bool> coincident_singular{false};
  for_rows(n, mode, [&](std::size_t i) {
    Tangent g = Tangent::Zero(points[i].size());
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || weights[j] == 0.0) continue;
      const double d = distance_unchecked(M, points[i], points[j]);
      if (d <= kCoincidentGradientTol) {
        if (slope_at_zero != 0.0) coincident_singular = true;
        continue;
      }
      if (M.kind == ManifoldKind::sphere && std::numbers::pi - d <= kink_tol) {
        const double slope = F.deriv(d);
        if (slope <= 0.0) kinks[i].emplace_back(j, -slope);
        continue;
      }
      g += (weights[j] * F.deriv(d)) * distance_gradient_unchecked(M, points[i], points[j]);
    }
    grads[i] = std::move(g);
  });
  if (coincident_singular) {
    throw DegenerateInput("coincident atoms where the kernel has a nonzero slope at 0");
  }

  auto project = [&](std::size_t i, const Tangent& v) -> Tangent { return v - v.dot(points[i]) * points[i]; };

  // A massless atom does not move its partners: its own kinks form a ball
  // of radius sum_j w_j |F'| that simply shrinks its gradient.
  struct Pair {
    std::size_t i, j;
    double k;
    Tangent v;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) {
      double radius = 0.0;
      for (const auto& [j, slope] : kinks[i]) radius += weights[j] * slope;
      if (radius > 0.0) {
        const double norm = tangent_norm(M, points[i], grads[i]);
        grads[i] *= norm > radius ? 1.0 - radius / norm : 0.0;
      }
      continue;
    }
    for (const auto& [j, slope] : kinks[i]) {
      if (j > i) pairs.push_back({i, j, weights[i] * weights[j] * slope, Tangent::Zero(points[i].size())});
    }
  }
  if (pairs.empty()) return grads;

  // Block coordinate descent on the shared unit vectors; exact in one sweep
  // when no atom has two kink partners.
  constexpr int kMaxSweeps = 200;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double change = 0.0;
    for (auto& p : pairs) {
      const double wi = weights[p.i], wj = weights[p.j];
      const Tangent hi = grads[p.i] - project(p.i, (p.k / wi) * p.v);
      const Tangent hj = grads[p.j] - project(p.j, (p.k / wj) * p.v);
      Tangent v = -(hi + hj) / (p.k * (1.0 / wi + 1.0 / wj));
      const double norm = v.norm();
      if (norm > 1.0) v /= norm;
      change = std::max(change, (v - p.v).norm());
      grads[p.i] = hi + project(p.i, (p.k / wi) * v);
      grads[p.j] = hj + project(p.j, (p.k / wj) * v);
      p.v = std::move(v);
    }
    if (change <= 1e-15) break;
  }
  return grads;
}

std::vector<Tangent> grad_positions(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                                    EvalMode mode) {
  require_manifold(M, mu);
  const auto pts = mu.points();
  const auto ws = mu.weights();
  auto grads = potential_gradients(M, F, pts, ws, mode);
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] *= 2.0 * ws[i];
  return grads;
}

std::vector<double> grad_weights(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                                 EvalMode mode) {
  auto report = energy_report(M, F, mu, mode);
  for (auto& u : report.potential_at_atoms) u *= 2.0;
  return report.potential_at_atoms;
}

}  // namespace repulsion
