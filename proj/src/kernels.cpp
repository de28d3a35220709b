#include "repulsion/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Splits "a=1,b=2" into a map, rejecting duplicates and malformed pairs.
std::map<std::string, std::string, std::less<>> parse_params(std::string_view body,
                                                             std::string_view spec) {
  std::map<std::string, std::string, std::less<>> out;
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string_view item = body.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("kernel parameter '" + std::string(item) + "' in '" + std::string(spec) +
                         "' must be key=value");
    }
    const std::string key(trim(item.substr(0, eq)));
    if (!out.emplace(key, std::string(trim(item.substr(eq + 1)))).second) {
      throw InvalidInput("duplicate kernel parameter '" + key + "'");
    }
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

double take_number(std::map<std::string, std::string, std::less<>>& params, const std::string& key,
                   std::string_view spec) {
  auto it = params.find(key);
  if (it == params.end()) {
    throw InvalidInput("kernel spec '" + std::string(spec) + "' is missing parameter '" + key + "'");
  }
  double v = 0.0;
  if (!parse_number(it->second, v)) {
    throw InvalidInput("kernel parameter '" + key + "' is not a number: '" + it->second + "'");
  }
  params.erase(it);
  return v;
}

void reject_leftovers(const std::map<std::string, std::string, std::less<>>& params,
                      std::string_view spec) {
  if (!params.empty()) {
    throw InvalidInput("unknown kernel parameter '" + params.begin()->first + "' in '" +
                       std::string(spec) + "'");
  }
}

}  // namespace

std::string_view to_string(RepulsionKind kind) {
  switch (kind) {
    case RepulsionKind::weakly_repulsive:
      return "weakly_repulsive";
    case RepulsionKind::strongly_repulsive:
      return "strongly_repulsive";
    case RepulsionKind::other:
      return "other";
  }
  return "other";
}

Kernel Kernel::power_law(double delta) {
  if (!std::isfinite(delta) || delta == 0.0) throw InvalidInput("power law needs finite delta != 0");
  return Kernel(PowerLaw{delta});
}

Kernel Kernel::attractive_repulsive(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha == 0.0 || beta == 0.0) {
    throw InvalidInput("attractive-repulsive kernel needs finite nonzero exponents");
  }
  if (!(alpha > beta)) throw InvalidInput("attractive-repulsive kernel needs alpha > beta");
  return Kernel(AttractiveRepulsive{alpha, beta});
}

Kernel Kernel::cos_power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput("cos power kernel needs p > 0");
  return Kernel(CosPower{p});
}

Kernel Kernel::tabulated(std::vector<double> t, std::vector<double> F) {
  if (t.size() != F.size() || t.size() < 2) {
    throw InvalidInput("tabulated kernel needs at least two (t, F) samples");
  }
  if (t.front() < 0.0) throw InvalidInput("tabulated kernel samples need t >= 0");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || std::isnan(F[i])) throw InvalidInput("non-finite kernel sample");
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw InvalidInput("tabulated kernel samples must be strictly increasing in t");
    }
  }
  return Kernel(Tabulated{std::move(t), std::move(F)});
}

Kernel Kernel::from_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open kernel table '" + path + "'");
  std::vector<double> t, F;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto comma = row.find(',');
    double a = 0.0, b = 0.0;
    if (comma == std::string_view::npos || !parse_number(row.substr(0, comma), a) ||
        !parse_number(row.substr(comma + 1), b)) {
      if (t.empty() && lineno == 1) continue;  // header
      throw InvalidInput("malformed kernel table row " + std::to_string(lineno) + " in '" + path + "'");
    }
    t.push_back(a);
    F.push_back(b);
  }
  Kernel k = tabulated(std::move(t), std::move(F));
  k.source_ = path;
  return k;
}

Kernel Kernel::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view name = trim(spec.substr(0, colon));
  const std::string_view body = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (name == "table") {
    if (!body.starts_with("path=")) {
      throw InvalidInput("table kernel spec must be table:path=<csv>");
    }
    return from_table_file(std::string(body.substr(5)));
  }
  auto params = parse_params(body, spec);
  if (name == "power") {
    const double delta = take_number(params, "delta", spec);
    reject_leftovers(params, spec);
    return power_law(delta);
  }
  if (name == "attrep") {
    const double alpha = take_number(params, "alpha", spec);
    const double beta = take_number(params, "beta", spec);
    reject_leftovers(params, spec);
    return attractive_repulsive(alpha, beta);
  }
  if (name == "cospow") {
    const double p = take_number(params, "p", spec);
    reject_leftovers(params, spec);
    return cos_power(p);
  }
  throw InvalidInput("unknown kernel family '" + std::string(name) + "'");
}

std::string Kernel::to_string() const {
  return std::visit(
      overloaded{
          [](const PowerLaw& k) { return "power:delta=" + shortest(k.delta); },
          [](const AttractiveRepulsive& k) {
            return "attrep:alpha=" + shortest(k.alpha) + ",beta=" + shortest(k.beta);
          },
          [](const CosPower& k) { return "cospow:p=" + shortest(k.p); },
          [this](const Tabulated& k) {
            return source_.empty() ? "table:samples=" + std::to_string(k.t.size())
                                   : "table:path=" + source_;
          },
      },
      family_);
}

double Kernel::eval(double t) const {
  if (!(t >= 0.0)) throw InvalidInput("kernel argument must be >= 0");
  return std::visit(
      overloaded{
          [t](const PowerLaw& k) -> double {
            if (t == 0.0) return k.delta > 0.0 ? 0.0 : kInf;
            return k.delta > 0.0 ? -std::pow(t, k.delta) : std::pow(t, k.delta);
          },
          [t](const AttractiveRepulsive& k) -> double {
            if (t == 0.0) return k.beta < 0.0 ? kInf : (k.alpha < 0.0 ? -kInf : 0.0);
            return std::pow(t, k.alpha) / k.alpha - std::pow(t, k.beta) / k.beta;
          },
          [t](const CosPower& k) -> double { return std::pow(std::abs(std::cos(t)), k.p); },
          [t](const Tabulated& k) -> double {
            if (t < k.t.front() || t > k.t.back()) {
              throw InvalidInput("kernel table queried outside its sample range");
            }
            const auto hi = std::upper_bound(k.t.begin(), k.t.end(), t);
            if (hi == k.t.end()) return k.F.back();
            const auto i = static_cast<std::size_t>(hi - k.t.begin());
            const double s = (t - k.t[i - 1]) / (k.t[i] - k.t[i - 1]);
            return k.F[i - 1] + s * (k.F[i] - k.F[i - 1]);
          },
      },
      family_);
}

double Kernel::deriv(double t) const {
  return std::visit(
      overloaded{
          [t](const PowerLaw& k) -> double { return -std::abs(k.delta) * std::pow(t, k.delta - 1.0); },
          [t](const AttractiveRepulsive& k) -> double {
            return std::pow(t, k.alpha - 1.0) - std::pow(t, k.beta - 1.0);
          },
          [t](const CosPower& k) -> double {
            const double c = std::cos(t);
            const double sgn = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
            if (sgn == 0.0) return k.p > 1.0 ? 0.0 : (k.p == 1.0 ? -std::sin(t) : -kInf * std::sin(t));
            return -k.p * std::pow(std::abs(c), k.p - 1.0) * sgn * std::sin(t);
          },
          [](const Tabulated&) -> double {
            throw UnsupportedOperation("tabulated kernels have no analytic derivative");
          },
      },
      family_);
}

double Kernel::deriv_at_zero() const {
  return std::visit(
      overloaded{
          [](const PowerLaw& k) -> double {
            if (k.delta > 1.0) return 0.0;
            return k.delta == 1.0 ? -1.0 : kNaN;
          },
          [](const AttractiveRepulsive& k) -> double {
            // beta < alpha, so the beta term dominates near zero
            if (k.beta > 1.0) return 0.0;
            if (k.beta == 1.0) return -1.0;
            return kNaN;
          },
          [](const CosPower&) -> double { return 0.0; },
          [](const Tabulated&) -> double { return kNaN; },
      },
      family_);
}

bool Kernel::is_singular() const {
  if (const auto* tab = std::get_if<Tabulated>(&family_)) {
    return tab->t.front() == 0.0 && tab->F.front() == kInf;
  }
  return eval(0.0) == kInf;
}

double Kernel::scan_decreasing_radius() const {
  constexpr double t_min = 1e-6;
  constexpr double t_max = 1e3;
  constexpr double ratio = 1.001;
  double last_ok = 0.0;
  for (double t = t_min; t <= t_max; t *= ratio) {
    if (!(deriv(t) < 0.0)) return last_ok;
    last_ok = t;
  }
  return last_ok;
}

RepulsionClass Kernel::classify(FitRange fit_range) const {
  if (const auto* tab = std::get_if<Tabulated>(&family_)) {
    std::vector<double> lx, ly;
    int negative = 0, positive = 0;
    for (std::size_t i = 0; i < tab->t.size(); ++i) {
      const double t = tab->t[i];
      if (t <= 0.0 || t < fit_range.lo || t > fit_range.hi || t >= 0.1) continue;
      const double f = tab->F[i];
      if (f < 0.0) ++negative;
      if (f > 0.0) ++positive;
      if (f != 0.0 && std::isfinite(f)) {
        lx.push_back(std::log(t));
        ly.push_back(std::log(std::abs(f)));
      }
    }
    if (negative + positive < 8 || lx.size() < 8) {
      throw InvalidInput("tabulated kernel needs >= 8 samples with t < 0.1 inside the fit range");
    }
    RepulsionClass rc;
    // Initial decreasing run of the samples.
    rc.decreasing_radius = 0.0;
    for (std::size_t i = 1; i < tab->t.size() && tab->F[i] < tab->F[i - 1]; ++i) {
      rc.decreasing_radius = tab->t[i];
    }
    if (negative > 0 && positive > 0) return rc;
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    rc.alpha = slope;
    rc.C = std::exp(intercept);
    if (negative > 0 && slope > 2.0) rc.kind = RepulsionKind::weakly_repulsive;
    if (positive > 0 && slope < 0.0) rc.kind = RepulsionKind::strongly_repulsive;
    return rc;
  }

  RepulsionClass rc;
  rc.decreasing_radius = scan_decreasing_radius();
  std::visit(overloaded{
                 [&rc](const PowerLaw& k) {
                   rc.C = 1.0;
                   rc.alpha = k.delta;
                   if (k.delta > 2.0) rc.kind = RepulsionKind::weakly_repulsive;
                   if (k.delta < 0.0) rc.kind = RepulsionKind::strongly_repulsive;
                 },
                 [&rc](const AttractiveRepulsive& k) {
                   rc.C = 1.0 / std::abs(k.beta);
                   rc.alpha = k.beta;
                   if (k.beta > 2.0) rc.kind = RepulsionKind::weakly_repulsive;
                   if (k.beta < 0.0) rc.kind = RepulsionKind::strongly_repulsive;
                 },
                 [&rc](const CosPower& k) {
                   // F(t) - F(0) ~ -(p/2) t^2: quadratic, never weakly repulsive
                   rc.C = 0.5 * k.p;
                   rc.alpha = 2.0;
                 },
                 [](const Tabulated&) {},
             },
             family_);
  return rc;
}

}  // namespace repulsion
