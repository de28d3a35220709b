#include "repulsion/descent.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

constexpr double kCullWeight = 1e-14;
constexpr double kMinStep = 1e-14;
constexpr int kMaxWeightHalvings = 30;
constexpr double kMaxKinkTol = 1e-3;

struct State {
  std::vector<Point> points;
  std::vector<double> weights;
};

std::size_t count_clusters(const Manifold& M, const std::vector<Point>& pts, double eps) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t count = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance_unchecked(M, pts[i], pts[j]) > eps) continue;
      const std::size_t a = find(i), b = find(j);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        --count;
      }
    }
  }
  return count;
}

Point confine(const Point& x, double radius) {
  if (radius <= 0.0) return x;
  const double r = x.norm();
  return r > radius ? Point(x * (radius / r)) : x;
}

void renormalize(std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
}

void cull(State& s) {
  if (std::none_of(s.weights.begin(), s.weights.end(), [](double w) { return w < kCullWeight; })) return;
  State kept;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (s.weights[i] >= kCullWeight) {
      kept.points.push_back(std::move(s.points[i]));
      kept.weights.push_back(s.weights[i]);
    }
  }
  renormalize(kept.weights);
  s = std::move(kept);
}

DiscreteMeasure to_measure(const Manifold& M, const State& s) {
  std::vector<Atom> atoms;
  atoms.reserve(s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) atoms.push_back({s.points[i], s.weights[i]});
  return DiscreteMeasure(M, std::move(atoms));
}

State from_measure(const DiscreteMeasure& mu) {
  State s{mu.points(), mu.weights()};
  return s;
}

bool armijo_ok(double trial, double current, double required_decrease) {
  if (!std::isfinite(trial)) return false;
  if (trial <= current - required_decrease) return true;
  // Below rounding resolution of the energy a non-increase is all one can ask.
  const double resolution = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(current));
  return required_decrease <= resolution && trial <= current;
}

// Rounding noise of an n-atom energy sum; the weight step tolerates it so that
// it keeps equalising potentials once the true decrease drops below it.
double summation_slack(double energy_value, std::size_t n) {
  const double noise = 4.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(energy_value));
  return std::min(noise, 5e-13);
}

}  // namespace

void DescentConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidInput("descent config: " + what); };
  if (n_atoms < 1) fail("n_atoms must be >= 1");
  if (max_iters < 0) fail("max_iters must be >= 0");
  if (!(step_init > 0.0)) fail("step_init must be > 0");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor must lie in (0,1)");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0,1)");
  if (!(weight_step > 0.0)) fail("weight_step must be > 0");
  if (!(merge_eps > 0.0)) fail("merge_eps must be > 0");
  if (merge_every < 1) fail("merge_every must be >= 1");
  if (!(anneal_temp0 >= 0.0)) fail("anneal_temp0 must be >= 0");
  if (!(anneal_decay > 0.0 && anneal_decay < 1.0)) fail("anneal_decay must lie in (0,1)");
  if (!(stop_grad_tol > 0.0)) fail("stop_grad_tol must be > 0");
  if (restarts < 1) fail("restarts must be >= 1");
  if (!(confine_radius >= 0.0)) fail("confine_radius must be >= 0");
  if (workers < 1) fail("workers must be >= 1");
}

Trajectory minimize(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu0,
                    const DescentConfig& cfg) {
  cfg.validate();
  if (!F.is_analytic()) throw UnsupportedOperation("descent needs an analytic kernel");
  if (!(M == mu0.manifold())) throw InvalidInput("initial measure lives on another manifold");
  if (cfg.confine_radius > 0.0 && M.kind != ManifoldKind::euclidean) {
    throw InvalidInput("confinement radius is only supported in Euclidean space");
  }
  const bool frozen_weights = F.is_singular();
  const double R = cfg.confine_radius;

  State s = from_measure(mu0);
  for (auto& p : s.points) p = confine(p, R);
  if (!frozen_weights) cull(s);

  Rng rng(cfg.seed);
  double temp = cfg.anneal_temp0;
  Trajectory traj{{}, {}, mu0};
  traj.seed = cfg.seed;

  auto report = energy_report(M, F, s.points, s.weights, cfg.mode);
  if (!std::isfinite(report.value)) {
    throw InvalidInput("initial configuration has non-finite energy (coincident singular atoms?)");
  }
  StepKind last_kind = StepKind::start;
  const double kink_floor = kAntipodalSubgradientTol;
  double kink_tol = kink_floor;

  bool at_rounding_floor = false;
  std::int64_t it = 0;
  for (;; ++it) {
    if (s.points.size() > 1 && count_clusters(M, s.points, kCoincidentGradientTol) < s.points.size()) {
      // Atoms that met: fuse them now, the gradient is undefined between them.
      const std::size_t before = s.points.size();
      const double e_before = report.value;
      s = from_measure(merge_atoms(to_measure(M, s), kCoincidentGradientTol));
      report = energy_report(M, F, s.points, s.weights, cfg.mode);
      traj.merges.push_back({it, e_before, report.value, before, s.points.size()});
      last_kind = StepKind::merge;
    }
    const std::size_t n = s.points.size();
    const double E = report.value;

    // Per-unit-mass descent directions D_i = 2 grad U_i.
    std::vector<Tangent> dirs;
    double pos_norm = 0.0;
    double slope = 0.0;
    auto directions = [&] {
      dirs = potential_gradients(M, F, s.points, s.weights, cfg.mode, kink_tol);
      pos_norm = 0.0;
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dirs[i] *= 2.0;
        if (R > 0.0 && s.points[i].norm() >= R * (1.0 - 1e-12)) {
          // Drop the outward part of the move -eta * D at the boundary.
          const Point normal = s.points[i] / s.points[i].norm();
          const double outward = -dirs[i].dot(normal);
          if (outward > 0.0) dirs[i] += outward * normal;
        }
        const double g = tangent_norm(M, s.points[i], dirs[i]);
        if (s.weights[i] > 0.0) pos_norm = std::max(pos_norm, g);
        slope += s.weights[i] * g * g;
      }
    };
    directions();
    while (pos_norm < cfg.stop_grad_tol && kink_tol > kink_floor) {
      kink_tol = std::max(kink_floor, kink_tol * 0.1);
      directions();
    }
    double weight_norm = 0.0;
    if (!frozen_weights) {
      for (std::size_t i = 0; i < n; ++i) {
        if (s.weights[i] > 0.0) {
          weight_norm = std::max(weight_norm, std::abs(2.0 * report.potential_at_atoms[i] - 2.0 * E));
        }
      }
    }
    const double grad_norm = std::max(pos_norm, weight_norm);
    traj.iterates.push_back({it, E, grad_norm, count_clusters(M, s.points, cfg.merge_eps), last_kind});

    if (grad_norm < cfg.stop_grad_tol && temp == 0.0) {
      traj.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    last_kind = StepKind::descent;

    // (a) Armijo position step.
    if (pos_norm >= cfg.stop_grad_tol || weight_norm < cfg.stop_grad_tol) {
      double eta = cfg.step_init;
      std::vector<Point> trial(n);
      bool finite_trial = true;
      while (true) {
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = confine(exp_map(M, s.points[i], -eta * dirs[i]), R);
        }
        auto trial_report = energy_report(M, F, trial, s.weights, cfg.mode);
        finite_trial = std::isfinite(trial_report.value);
        if (armijo_ok(trial_report.value, E, cfg.armijo_c * eta * slope)) {
          s.points = std::move(trial);
          report = std::move(trial_report);
          // Partners an atom could have stepped across count as kinks next time.
          kink_tol = std::clamp(2.0 * eta * pos_norm, kink_floor, kMaxKinkTol);
          break;
        }
        eta *= cfg.backtrack_factor;
        if (eta < kMinStep && M.kind == ManifoldKind::sphere && kink_tol < kMaxKinkTol) {
          // Zig-zagging across the kink of an almost antipodal pair: widen
          // the kink band and retry with the minimal-norm subgradient.
          kink_tol = std::min(kMaxKinkTol, kink_tol * 10.0);
          directions();
          eta = cfg.step_init;
          if (pos_norm < cfg.stop_grad_tol) break;
          continue;
        }
        if (eta < kMinStep && finite_trial) {
          // Finite energies but no acceptable step: stop here, unconverged.
          at_rounding_floor = true;
          break;
        }
        if (eta < kMinStep) {
          std::ostringstream msg;
          msg << "descent stalled at iteration " << it << ": no acceptable step above " << kMinStep
              << " (energy " << E << ", gradient norm " << grad_norm << ")";
          throw StallError(msg.str());
        }
      }
    }
    if (at_rounding_floor) break;

    // (b) Mirror step on the weights.
    if (!frozen_weights && n > 1) {
      const double E1 = report.value;
      double step = cfg.weight_step;
      for (int h = 0; h < kMaxWeightHalvings; ++h, step *= 0.5) {
        std::vector<double> w = s.weights;
        for (std::size_t i = 0; i < n; ++i) {
          w[i] *= std::exp(-step * (2.0 * report.potential_at_atoms[i] - 2.0 * E1));
        }
        renormalize(w);
        auto trial_report = energy_report(M, F, s.points, w, cfg.mode);
        if (std::isfinite(trial_report.value) && trial_report.value <= E1 + summation_slack(E1, n)) {
          s.weights = std::move(w);
          report = std::move(trial_report);
          break;
        }
      }
      if (std::any_of(s.weights.begin(), s.weights.end(), [](double w) { return w < kCullWeight; })) {
        cull(s);
        report = energy_report(M, F, s.points, s.weights, cfg.mode);
      }
    }

    // (c) Annealing noise, exempt from monotonicity.
    if (temp > 0.0) {
      for (auto& p : s.points) p = confine(exp_map(M, p, random_tangent(M, p, rng, temp)), R);
      temp *= cfg.anneal_decay;
      if (temp < 1e-15) temp = 0.0;
      report = energy_report(M, F, s.points, s.weights, cfg.mode);
      if (!std::isfinite(report.value)) {
        throw StallError("annealing produced a non-finite energy");
      }
      last_kind = StepKind::anneal;
    }

    // (d) Periodic merging.
    if ((it + 1) % cfg.merge_every == 0 && s.points.size() > 1) {
      const std::size_t before = s.points.size();
      if (count_clusters(M, s.points, cfg.merge_eps) < before) {
        const double e_before = report.value;
        s = from_measure(merge_atoms(to_measure(M, s), cfg.merge_eps));
        report = energy_report(M, F, s.points, s.weights, cfg.mode);
        traj.merges.push_back({it, e_before, report.value, before, s.points.size()});
        last_kind = StepKind::merge;
      }
    }
  }

  DiscreteMeasure final_measure = merge_atoms(to_measure(M, s), cfg.merge_eps);
  traj.final_energy = energy(M, F, final_measure, cfg.mode);
  traj.final = std::move(final_measure);
  traj.iterations = it;
  return traj;
}

std::uint64_t split_seed(std::uint64_t seed, int k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(k) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DiscreteMeasure random_configuration(const Manifold& M, int n_atoms, std::uint64_t seed,
                                     double confine_radius) {
  if (n_atoms < 1) throw InvalidInput("need at least one atom");
  Rng rng(seed);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n_atoms));
  while (static_cast<int>(pts.size()) < n_atoms) {
    Point p = confine_radius > 0.0 ? random_point(M, rng, confine_radius) : random_point(M, rng);
    if (confine_radius > 0.0 && p.norm() > confine_radius) continue;
    pts.push_back(std::move(p));
  }
  return DiscreteMeasure::uniform(M, pts);
}

Trajectory multi_start(const Manifold& M, const Kernel& F, const DescentConfig& cfg) {
  cfg.validate();
  const int runs = cfg.restarts;
  std::vector<std::optional<Trajectory>> results(static_cast<std::size_t>(runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(runs));

  auto run_one = [&](int k) {
    try {
      DescentConfig local = cfg;
      local.seed = split_seed(cfg.seed, k);
      const auto mu0 = random_configuration(M, cfg.n_atoms, local.seed, cfg.confine_radius);
      Trajectory t = minimize(M, F, mu0, local);
      t.restart = k;
      results[static_cast<std::size_t>(k)] = std::move(t);
    } catch (const StallError&) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };

  if (cfg.workers <= 1 || runs == 1) {
    for (int k = 0; k < runs; ++k) run_one(k);
  } else {
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(cfg.workers));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < cfg.workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int k = w; k < runs; k += cfg.workers) run_one(k);
          } catch (...) {
            fatal[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : fatal) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::optional<Trajectory> best;
  for (auto& r : results) {
    if (r && (!best || r->final_energy < best->final_energy)) best = std::move(r);
  }
  if (!best) std::rethrow_exception(errors.back());
  return std::move(*best);
}

}  // namespace repulsion
