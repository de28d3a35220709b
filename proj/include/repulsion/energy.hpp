#pragma once

// Interaction energy I_F(mu) = sum_i sum_j w_i w_j F(rho(x_i, x_j)) of discrete
// measures, its potential, second-variation quadratic form and gradients.
//
// Self-interaction convention: the diagonal i = j contributes w_i^2 F(0)
// whenever F(0) is finite (zero for weakly repulsive kernels). For singular
// kernels (F(0) = +inf) the diagonal is dropped from the energy and the
// potential, which makes the energy of an n-point configuration with distinct
// atoms finite; coincident distinct atoms still give +inf.

#include <cstdint>
#include <span>
#include <vector>

#include "repulsion/geometry.hpp"
#include "repulsion/kernels.hpp"
#include "repulsion/measures.hpp"

namespace repulsion {

/// certified: one thread, fixed index-order summation.
/// fast: rows are spread over worker threads; row sums are still reduced in
/// index order, so results agree bit for bit with certified mode.
enum class EvalMode { certified, fast };

/// certified when the environment sets REPULSION_CERTIFIED=1, fast otherwise.
EvalMode default_eval_mode();

/// Default width of the band around the antipode where the sphere distance is
/// treated as sitting on its kink (no unique gradient there).
inline constexpr double kAntipodalSubgradientTol = 1e-10;
/// Distinct atoms closer than this are treated as coincident by the gradients.
inline constexpr double kCoincidentGradientTol = 1e-9;

struct EnergyReport {
  double value = 0.0;
  std::vector<double> potential_at_atoms;
  std::int64_t pair_count = 0;
  /// Set when a singular kernel met coincident atoms (value is +inf).
  bool singular = false;
};

EnergyReport energy_report(const Manifold& M, const Kernel& F, std::span<const Point> points,
                           std::span<const double> weights, EvalMode mode = EvalMode::certified);
EnergyReport energy_report(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                           EvalMode mode = EvalMode::certified);

double energy(const Manifold& M, const Kernel& F, std::span<const Point> points,
              std::span<const double> weights, EvalMode mode = EvalMode::certified);
double energy(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
              EvalMode mode = EvalMode::certified);

/// U(x) = sum_j w_j F(rho(x, x_j)).
double potential(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu, const Point& x);

/// B(mu1, mu2) = sum_i sum_j w_i v_j F(rho(x_i, y_j)).
double cross_energy(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu1,
                    const DiscreteMeasure& mu2);

/// sum_i sum_j a_i a_j F(rho(x_i, x_j)) including the diagonal, which is +inf
/// for singular kernels.
double quadratic_form(const Manifold& M, const Kernel& F, const SignedPerturbation& nu);

/// Riemannian gradient of the potential generated by all other atoms, at each
/// atom: grad U_i = sum_{j != i} w_j F'(rho_ij) grad_x rho(x_i, x_j).
///
/// On the sphere, pairs within kink_tol of antipodal sit on the kink of rho.
/// When F' <= 0 there, the pair contributes k v / w_i to atom i and k v / w_j
/// to atom j, with k = w_i w_j |F'| and one shared v in the unit ball. The
/// returned element minimises sum_i w_i |grad U_i|^2 over those v. Otherwise
/// the pair is skipped.
std::vector<Tangent> potential_gradients(const Manifold& M, const Kernel& F,
                                         std::span<const Point> points,
                                         std::span<const double> weights,
                                         EvalMode mode = EvalMode::certified,
                                         double kink_tol = kAntipodalSubgradientTol);

/// Gradient of the energy with respect to atom positions: 2 w_i grad U_i.
std::vector<Tangent> grad_positions(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                                    EvalMode mode = EvalMode::certified);

/// Gradient of the energy with respect to the weights: 2 U(x_i).
std::vector<double> grad_weights(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu,
                                 EvalMode mode = EvalMode::certified);

}  // namespace repulsion
