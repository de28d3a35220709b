#include "repulsion/certify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "repulsion/energy.hpp"
#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_manifold(const Manifold& M, const DiscreteMeasure& mu) {
  if (!(M == mu.manifold())) throw InvalidInput("measure does not live on the given manifold");
}

std::vector<std::vector<double>> distance_matrix(const DiscreteMeasure& mu) {
  const std::size_t n = mu.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = distance_unchecked(mu.manifold(), mu[i].point, mu[j].point);
    }
  }
  return d;
}

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Smallest value of Q(t) / N(t) with Q(t) = A t^2 + B t + C the quadratic form
// of t delta_a + (1 - t) delta_b - delta_c and N(t) = t^2 + (1 - t)^2 + 1.
// Candidates: the vertex of Q, the stationary points of Q / N, which solve
// (A + B) t^2 - 2 (A - C) t - (B + C) = 0, and the limit A / 2 as |t| -> inf.
// Returns the margin and the t attaining it (NaN for the limit).
std::pair<double, double> triple_margin(double A, double B, double C) {
  auto ratio = [&](double t) { return (A * t * t + B * t + C) / (t * t + (1.0 - t) * (1.0 - t) + 1.0); };
  double best = 0.5 * A, best_t = std::numeric_limits<double>::quiet_NaN();
  auto consider = [&](double t) {
    if (!std::isfinite(t)) return;
    const double r = ratio(t);
    if (r < best) best = r, best_t = t;
  };
  if (A > 0.0) consider(-B / (2.0 * A));
  const double qa = A + B, qb = -2.0 * (A - C), qc = -(B + C);
  if (qa == 0.0) {
    if (qb != 0.0) consider(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      const double q = -0.5 * (qb + std::copysign(root, qb));
      if (q != 0.0) {
        consider(q / qa);
        consider(qc / q);
      } else {
        consider(0.0);
      }
    }
  }
  consider(0.0);
  consider(1.0);
  return {best, best_t};
}

}  // namespace

CertificateReport constant_potential_check(const Manifold& M, const Kernel& F,
                                           const DiscreteMeasure& mu, double rel_tol) {
  require_manifold(M, mu);
  CertificateReport rep;
  rep.condition = "constant_potential";
  rep.tolerance = rel_tol;
  rep.config = {{"rel_tol", rel_tol}};
  const auto report = energy_report(M, F, mu);
  double lo = kInf, hi = -kInf, sum = 0.0;
  std::size_t lo_i = 0, hi_i = 0, count = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i].weight <= 0.0) continue;
    const double u = report.potential_at_atoms[i];
    if (u < lo) lo = u, lo_i = i;
    if (u > hi) hi = u, hi_i = i;
    sum += u;
    ++count;
  }
  rep.samples_checked = static_cast<std::int64_t>(count);
  const double mean = sum / static_cast<double>(count);
  const double spread = hi - lo;
  rep.worst_margin = std::isfinite(spread) ? -spread / std::max(1.0, std::abs(mean)) : -kInf;
  rep.passed = rep.worst_margin >= -rel_tol;
  rep.witness_atoms = {hi_i, lo_i};
  rep.witness = "max potential " + describe(hi) + " at atom " + std::to_string(hi_i) +
                ", min potential " + describe(lo) + " at atom " + std::to_string(lo_i);
  return rep;
}

CertificateReport second_variation_check(const Manifold& M, const Kernel& F,
                                         const DiscreteMeasure& mu, double ball_radius,
                                         int n_samples, std::uint64_t seed, double tol) {
  require_manifold(M, mu);
  if (!(ball_radius > 0.0)) throw InvalidInput("ball radius must be positive");
  if (n_samples < 0) throw InvalidInput("sample count must be >= 0");
  CertificateReport rep;
  rep.condition = "second_variation";
  rep.tolerance = tol;
  rep.config = {{"ball_radius", ball_radius},
                {"n_samples", static_cast<double>(n_samples)},
                {"seed", static_cast<double>(seed)},
                {"tol", tol}};

  const std::size_t n = mu.size();
  const auto dist = distance_matrix(mu);
  const double f0 = F.eval(0.0);
  std::vector<std::vector<double>> Fm(n, std::vector<double>(n, f0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) Fm[i][j] = F.eval(dist[i][j]);
    }
  }
  std::vector<std::vector<std::size_t>> balls(n);
  bool any_ball = false;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[c][j] <= ball_radius) balls[c].push_back(j);
    }
    any_ball = any_ball || balls[c].size() >= 2;
  }
  if (!any_ball) {
    rep.witness = "vacuous: no two atoms within one ball of radius " + describe(ball_radius);
    return rep;
  }

  // Random perturbations on the atoms of one ball.
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < n_samples; ++s) {
    const std::size_t c = pick(rng);
    const auto& members = balls[c];
    std::vector<double> a(members.size());
    for (auto& v : a) v = unif(rng);
    if (members.size() < 2) continue;
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(a.size());
    double norm2 = 0.0;
    for (auto& v : a) {
      v -= mean;
      norm2 += v * v;
    }
    if (norm2 < 1e-24) continue;
    ++rep.samples_checked;
    double q = 0.0;
    if (f0 == kInf) {
      q = kInf;
    } else {
      for (std::size_t i = 0; i < members.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < members.size(); ++j) row += a[j] * Fm[members[i]][members[j]];
        q += a[i] * row;
      }
    }
    const double margin = q / norm2;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.witness_atoms = members;
      std::ostringstream os;
      os.precision(17);
      os << "random perturbation around atom " << c << " with weights [";
      for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
      os << "]";
      rep.witness = os.str();
    }
  }

  // Every triple t delta_a + (1 - t) delta_b - delta_c inside one ball.
  auto within_ball = [&](std::size_t x, std::size_t y, std::size_t z) {
    return (dist[x][y] <= ball_radius && dist[x][z] <= ball_radius) ||
           (dist[y][x] <= ball_radius && dist[y][z] <= ball_radius) ||
           (dist[z][x] <= ball_radius && dist[z][y] <= ball_radius);
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b || !within_ball(a, b, c)) continue;
        ++rep.samples_checked;
        if (f0 == kInf) {
          if (rep.worst_margin == kInf && rep.witness.empty()) rep.witness = "singular kernel: Q = +inf";
          continue;
        }
        const double A = Fm[a][a] + Fm[b][b] - 2.0 * Fm[a][b];
        const double B = -2.0 * Fm[b][b] + 2.0 * Fm[a][b] - 2.0 * Fm[a][c] + 2.0 * Fm[b][c];
        const double C = Fm[b][b] + Fm[c][c] - 2.0 * Fm[b][c];
        const auto [margin, t] = triple_margin(A, B, C);
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          rep.witness_atoms = {a, b, c};
          rep.witness = "triple t*delta_" + std::to_string(a) + " + (1-t)*delta_" + std::to_string(b) +
                        " - delta_" + std::to_string(c) + " at t = " + describe(t);
        }
      }
    }
  }
  rep.passed = rep.worst_margin >= -tol;
  return rep;
}

double sqrt_triangle_margin(const Kernel& F, double s1, double s2, double s3) {
  std::array<double, 3> s{s1, s2, s3};
  std::sort(s.begin(), s.end());
  double roots[3];
  for (int i = 0; i < 3; ++i) {
    const double f = F.eval(s[static_cast<std::size_t>(i)]);
    if (f > 0.0) throw InvalidInput("square-root triangle test needs F <= 0 on the triangle sides");
    roots[i] = std::sqrt(-f);
  }
  return roots[0] + roots[1] - roots[2];
}

CertificateReport sqrt_triangle_check(const Manifold& M, const Kernel& F,
                                      const DiscreteMeasure& mu, double r0, double tol) {
  require_manifold(M, mu);
  const auto cls = F.classify();
  if (cls.kind != RepulsionKind::weakly_repulsive) {
    throw InvalidInput("square-root triangle test needs a weakly repulsive kernel");
  }
  if (!(r0 > 0.0)) throw InvalidInput("r0 must be positive");
  if (r0 > cls.decreasing_radius) throw InvalidInput("r0 exceeds the kernel's decreasing radius");
  if (!(F.eval(r0) < 0.0)) throw InvalidInput("kernel must be negative on (0, r0]");

  CertificateReport rep;
  rep.condition = "sqrt_triangle";
  rep.tolerance = tol;
  rep.config = {{"r0", r0}, {"tol", tol}};
  const std::size_t n = mu.size();
  const auto dist = distance_matrix(mu);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist[i][j] > r0) continue;
      for (std::size_t k = j + 1; k < n; ++k) {
        if (dist[i][k] > r0 || dist[j][k] > r0) continue;
        ++rep.samples_checked;
        const double margin = sqrt_triangle_margin(F, dist[i][j], dist[i][k], dist[j][k]);
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          rep.witness_atoms = {i, j, k};
          rep.witness = "sides " + describe(dist[i][j]) + ", " + describe(dist[i][k]) + ", " +
                        describe(dist[j][k]);
        }
      }
    }
  }
  if (rep.samples_checked == 0) rep.witness = "vacuous: no triple with all sides <= " + describe(r0);
  rep.passed = rep.worst_margin >= -tol;
  return rep;
}

double r_function(double s_k, double s_kl, double s_l, double alpha) {
  const double h = 0.5 * alpha;
  return std::pow(s_kl, h) + std::pow(s_l, h) - std::pow(s_k, h);
}

DiscretenessReport discreteness_report(const DiscreteMeasure& mu, const std::vector<double>& scales) {
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw InvalidInput("discreteness scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1])) {
      throw InvalidInput("discreteness scales must be strictly decreasing");
    }
  }
  DiscretenessReport out;
  for (const double eps : scales) {
    const auto clusters = support_clusters(mu, eps);
    double diam = 0.0;
    for (const auto& c : clusters) diam = std::max(diam, cluster_diameter(mu, c));
    out.rows.push_back({eps, clusters.size(), diam});
  }
  if (out.rows.empty()) return out;
  const std::size_t ref = out.rows.back().cluster_count;
  for (auto it = out.rows.rbegin(); it != out.rows.rend(); ++it) {
    if (it->cluster_count != ref || it->max_cluster_diameter > it->eps) break;
    out.discrete_at = it->eps;
    out.stable_count = ref;
  }
  return out;
}

CertificateReport nested_support_check(const Manifold& M, const Kernel& F,
                                       const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                       double support_tol, double energy_tol) {
  require_manifold(M, mu1);
  require_manifold(M, mu2);
  CertificateReport rep;
  rep.condition = "nested_support";
  rep.tolerance = 0.0;
  rep.config = {{"support_tol", support_tol}, {"energy_tol", energy_tol}};
  bool nested = true;
  for (std::size_t i = 0; i < mu1.size() && nested; ++i) {
    if (mu1[i].weight <= 0.0) continue;
    ++rep.samples_checked;
    nested = std::any_of(mu2.atoms().begin(), mu2.atoms().end(), [&](const Atom& b) {
      return b.weight > 0.0 && distance_unchecked(M, mu1[i].point, b.point) <= support_tol;
    });
  }
  const double e1 = energy(M, F, mu1);
  const double e2 = energy(M, F, mu2);
  const double gap = std::abs(e1 - e2);
  rep.witness = std::string(nested ? "supports nested" : "supports not nested") + ", I(mu1) = " +
                describe(e1) + ", I(mu2) = " + describe(e2);
  if (nested) {
    rep.worst_margin = std::isfinite(gap) ? energy_tol - gap : -kInf;
  }
  rep.passed = rep.worst_margin >= -rep.tolerance;
  return rep;
}

}  // namespace repulsion
