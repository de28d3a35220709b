#pragma once

#include <cstddef>
#include <vector>

#include "repulsion/geometry.hpp"

namespace repulsion {

struct Atom {
  Point point;
  double weight = 0.0;
};

struct SignedAtom {
  Point point;
  double weight = 0.0;  // signed
};

/// Finitely supported probability measure on a model manifold.
///
/// Construction validates points and weights (nonnegative, summing to one
/// within kMassTol) and merges atoms closer than kCoincidentTol by adding
/// their weights, so every instance is in canonical form. Zero-weight atoms
/// are kept; they do not change any energy.
class DiscreteMeasure {
 public:
  static constexpr double kMassTol = 1e-12;
  static constexpr double kCoincidentTol = 1e-12;

  DiscreteMeasure(Manifold M, std::vector<Atom> atoms);

  /// Equal weights 1/n on the given points.
  static DiscreteMeasure uniform(Manifold M, const std::vector<Point>& points);
  static DiscreteMeasure dirac(Manifold M, Point x);

  const Manifold& manifold() const { return manifold_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  std::vector<Point> points() const;
  std::vector<double> weights() const;
  /// Largest pairwise distance between atoms.
  double diameter() const;

 private:
  Manifold manifold_;
  std::vector<Atom> atoms_;
};

/// Signed measure of total mass zero supported on finitely many points.
class SignedPerturbation {
 public:
  static constexpr double kMassTol = 1e-12;

  /// Throws InvalidInput unless the signed weights sum to zero within
  /// kMassTol * max(1, sum |a_i|).
  SignedPerturbation(Manifold M, std::vector<SignedAtom> atoms);

  /// mu - nu as a signed measure on the union of supports.
  static SignedPerturbation difference(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

  const Manifold& manifold() const { return manifold_; }
  const std::vector<SignedAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  /// Euclidean norm of the signed weight vector.
  double weight_norm() const;
  SignedPerturbation scaled(double lambda) const;
  /// True when every atom lies within tol of an atom of mu.
  bool supported_on(const DiscreteMeasure& mu, double tol = 1e-9) const;

 private:
  Manifold manifold_;
  std::vector<SignedAtom> atoms_;
};

/// (1 - t) mu1 + t mu2, with coincident atoms merged and zero-weight atoms
/// dropped.
DiscreteMeasure mix(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double t);

/// Exact bottleneck (Wasserstein infinity) distance between discrete measures.
double d_infinity(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Whether a coupling of mu and nu exists that only moves mass along pairs at
/// distance <= threshold.
bool bottleneck_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double threshold);

using Cluster = std::vector<std::size_t>;

/// Single-linkage components at hop length eps. Members are sorted and the
/// clusters are ordered by their smallest member.
std::vector<Cluster> support_clusters(const DiscreteMeasure& mu, double eps);

/// Largest intrinsic distance between two members of the cluster.
double cluster_diameter(const DiscreteMeasure& mu, const Cluster& cluster);

/// Weighted Riemannian barycenter: fixed point of x = exp_x(sum w_i log_x(x_i) / W).
Point riemannian_barycenter(const Manifold& M, const std::vector<Point>& points,
                            const std::vector<double>& weights, double tol = 1e-10,
                            int max_iters = 200);

/// Replaces every single-linkage cluster at eps by one atom at its weighted
/// barycenter carrying the cluster's mass.
DiscreteMeasure merge_atoms(const DiscreteMeasure& mu, double eps);

}  // namespace repulsion
