#pragma once

// Necessary conditions satisfied by local minimizers of the interaction
// energy, evaluated on a discrete candidate as pass/fail certificates with
// quantitative margins. None of them is sufficient for local minimality.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repulsion/geometry.hpp"
#include "repulsion/kernels.hpp"
#include "repulsion/measures.hpp"

namespace repulsion {

struct CertificateReport {
  std::string condition;
  bool passed = true;
  /// Most negative (worst) margin found; +inf when nothing was checked.
  double worst_margin = std::numeric_limits<double>::infinity();
  /// Atom indices achieving the worst margin.
  std::vector<std::size_t> witness_atoms;
  /// Free-form description of the witness (weights, parameter t, ...).
  std::string witness;
  double tolerance = 0.0;
  std::int64_t samples_checked = 0;
  /// Parameters the check ran with, echoed into reports.
  std::vector<std::pair<std::string, double>> config;
};

/// The potential U(x_i) must be equal on every atom of the support.
/// worst_margin = -(max U - min U) / max(1, |mean U|).
CertificateReport constant_potential_check(const Manifold& M, const Kernel& F,
                                           const DiscreteMeasure& mu, double rel_tol = 1e-6);

/// Second-variation test: Q(nu) = sum a_i a_j F(rho_ij) >= 0 for zero-mass
/// perturbations supported on atoms inside one ball of radius ball_radius.
/// Combines n_samples random perturbations (margin Q / |a|^2) with an
/// exhaustive pass over three-atom perturbations t delta_a + (1-t) delta_b -
/// delta_c at the vertex value of t.
CertificateReport second_variation_check(const Manifold& M, const Kernel& F,
                                         const DiscreteMeasure& mu, double ball_radius,
                                         int n_samples = 1000, std::uint64_t seed = 0,
                                         double tol = 1e-8);

/// sqrt(-F(s_kl)) + sqrt(-F(s_l)) - sqrt(-F(s_k)) for a triangle with longest
/// side s_k (the sides may be passed in any order).
double sqrt_triangle_margin(const Kernel& F, double s1, double s2, double s3);

/// Square-root triangle inequality over every atom triple whose three sides are
/// at most r0. Throws InvalidInput unless F is weakly repulsive and negative
/// on (0, r0].
CertificateReport sqrt_triangle_check(const Manifold& M, const Kernel& F,
                                      const DiscreteMeasure& mu, double r0, double tol = 1e-8);

/// s_kl^{alpha/2} + s_l^{alpha/2} - s_k^{alpha/2}.
double r_function(double s_k, double s_kl, double s_l, double alpha);

struct DiscretenessRow {
  double eps = 0.0;
  std::size_t cluster_count = 0;
  double max_cluster_diameter = 0.0;
};

struct DiscretenessReport {
  std::vector<DiscretenessRow> rows;
  /// Largest scale eps* such that the cluster count is the same at every
  /// listed scale <= eps* and each of those rows has max diameter <= eps.
  std::optional<double> discrete_at;
  std::size_t stable_count = 0;
};

/// scales must be positive and strictly decreasing.
DiscretenessReport discreteness_report(const DiscreteMeasure& mu, const std::vector<double>& scales);

/// Fails when supp mu1 lies inside supp mu2 (within support_tol) while the two
/// energies differ by more than energy_tol: two genuine local minimizers
/// cannot be nested like that.
CertificateReport nested_support_check(const Manifold& M, const Kernel& F,
                                       const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                       double support_tol = 1e-6, double energy_tol = 1e-9);

}  // namespace repulsion
