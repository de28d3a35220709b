#pragma once

// Radial interaction profiles F(t) of the pairwise distance t.

#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace repulsion {

/// F(t) = -sgn(delta) t^delta. Both signs make the experiment a minimization.
struct PowerLaw {
  double delta;
};

/// F(t) = t^alpha / alpha - t^beta / beta with alpha > beta.
struct AttractiveRepulsive {
  double alpha;
  double beta;
};

/// F(t) = |cos t|^p.
struct CosPower {
  double p;
};

/// Piecewise-linear interpolation of sampled (t, F(t)) pairs.
struct Tabulated {
  std::vector<double> t;
  std::vector<double> F;
};

enum class RepulsionKind { weakly_repulsive, strongly_repulsive, other };

std::string_view to_string(RepulsionKind kind);

/// Small-t behaviour F(t) ~ -C t^alpha (weak) or C t^alpha (strong).
struct RepulsionClass {
  RepulsionKind kind = RepulsionKind::other;
  double C = 0.0;
  double alpha = 0.0;
  double decreasing_radius = 0.0;
};

struct FitRange {
  double lo = 1e-3;
  double hi = 1e-1;
};

class Kernel {
 public:
  using Family = std::variant<PowerLaw, AttractiveRepulsive, CosPower, Tabulated>;

  static Kernel power_law(double delta);
  static Kernel attractive_repulsive(double alpha, double beta);
  static Kernel cos_power(double p);
  static Kernel tabulated(std::vector<double> t, std::vector<double> F);
  /// Reads a two-column CSV "t,F" (an optional header line is skipped).
  static Kernel from_table_file(const std::string& path);

  /// "power:delta=3", "attrep:alpha=4,beta=2", "cospow:p=2", "table:path=f.csv".
  static Kernel parse(std::string_view spec);
  /// Canonical spec string; tabulated kernels echo their source path when known.
  std::string to_string() const;

  const Family& family() const { return family_; }
  bool is_analytic() const { return !std::holds_alternative<Tabulated>(family_); }

  /// F(t) for t >= 0. Singular power laws return +inf at t = 0.
  double eval(double t) const;
  /// F'(t) for t > 0. Throws UnsupportedOperation for tabulated kernels.
  double deriv(double t) const;
  /// lim_{t -> 0+} F'(t) when it is finite, NaN otherwise.
  double deriv_at_zero() const;
  /// True when F(0) = +inf, i.e. the kernel has no finite self-interaction.
  bool is_singular() const;

  RepulsionClass classify(FitRange fit_range = {}) const;

 private:
  explicit Kernel(Family f) : family_(std::move(f)) {}
  double scan_decreasing_radius() const;

  Family family_;
  std::string source_;
};

}  // namespace repulsion
