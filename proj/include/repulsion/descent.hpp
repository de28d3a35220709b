#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "repulsion/energy.hpp"
#include "repulsion/geometry.hpp"
#include "repulsion/kernels.hpp"
#include "repulsion/measures.hpp"

namespace repulsion {

struct DescentConfig {
  int n_atoms = 40;
  int max_iters = 50000;
  double step_init = 0.1;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  double weight_step = 0.02;
  double merge_eps = 1e-3;
  int merge_every = 100;
  double anneal_temp0 = 0.0;
  double anneal_decay = 0.99;
  double stop_grad_tol = 1e-9;
  std::uint64_t seed = 0;
  int restarts = 1;
  /// Euclidean only: atoms are projected back into the closed ball of this
  /// radius after every move. Zero disables the constraint.
  double confine_radius = 0.0;
  /// Threads used by multi_start for independent restarts.
  int workers = 1;
  EvalMode mode = EvalMode::certified;

  /// Throws InvalidInput when a field is out of range.
  void validate() const;
};

enum class StepKind { start, descent, anneal, merge };

struct Iterate {
  std::int64_t iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  std::size_t support_card = 0;
  StepKind kind = StepKind::descent;
};

struct MergeEvent {
  std::int64_t iter = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  std::size_t atoms_before = 0;
  std::size_t atoms_after = 0;
};

struct Trajectory {
  std::vector<Iterate> iterates;
  std::vector<MergeEvent> merges;
  DiscreteMeasure final;
  double final_energy = 0.0;
  bool converged = false;
  std::int64_t iterations = 0;
  std::uint64_t seed = 0;
  int restart = 0;
};

/// Candidate local minimizer search from mu0. Each iteration takes an Armijo
/// position step along the per-unit-mass Riemannian gradient, a mirror step
/// on the weights (skipped for singular kernels, whose n-point surrogate keeps
/// the weights fixed), optional annealing noise, and periodic atom merging.
Trajectory minimize(const Manifold& M, const Kernel& F, const DiscreteMeasure& mu0,
                    const DescentConfig& cfg);

/// Seed of restart k derived from the base seed (splitmix64).
std::uint64_t split_seed(std::uint64_t seed, int k);

/// Random initial configuration with equal weights drawn from the given seed.
DiscreteMeasure random_configuration(const Manifold& M, int n_atoms, std::uint64_t seed,
                                     double confine_radius = 0.0);

/// Runs cfg.restarts independent minimizations from random configurations
/// and returns the lowest final energy (ties go to the lower restart index).
Trajectory multi_start(const Manifold& M, const Kernel& F, const DescentConfig& cfg);

}  // namespace repulsion
