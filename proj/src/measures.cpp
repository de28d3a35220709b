#include "repulsion/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "repulsion/errors.hpp"

namespace repulsion {

namespace {

std::vector<Atom> canonicalize(const Manifold& M, std::vector<Atom> atoms) {
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (auto& a : atoms) {
    bool merged = false;
    for (auto& b : out) {
      if (distance_unchecked(M, a.point, b.point) <= DiscreteMeasure::kCoincidentTol) {
        b.weight += a.weight;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(a));
  }
  return out;
}

// Dinic max-flow on a small dense bipartite transport network.
class FlowNetwork {
 public:
  explicit FlowNetwork(int n) : graph_(n), level_(n), next_(n) {}

  void add_edge(int from, int to, double cap) {
    graph_[from].push_back({to, static_cast<int>(graph_[to].size()), cap});
    graph_[to].push_back({from, static_cast<int>(graph_[from].size()) - 1, 0.0});
  }

  double max_flow(int s, int t) {
    double flow = 0.0;
    while (bfs(s, t)) {
      std::fill(next_.begin(), next_.end(), 0);
      while (true) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= kEps) break;
        flow += pushed;
      }
    }
    return flow;
  }

 private:
  static constexpr double kEps = 1e-18;

  struct Edge {
    int to;
    int rev;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const Edge& e : graph_[u]) {
        if (e.cap > kEps && level_[e.to] < 0) {
          level_[e.to] = level_[u] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double limit) {
    if (u == t) return limit;
    for (int& i = next_[u]; i < static_cast<int>(graph_[u].size()); ++i) {
      Edge& e = graph_[u][i];
      if (e.cap <= kEps || level_[e.to] != level_[u] + 1) continue;
      const double pushed = dfs(e.to, t, std::min(limit, e.cap));
      if (pushed > kEps) {
        e.cap -= pushed;
        graph_[e.to][e.rev].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<int> next_;
};

void require_same_manifold(const Manifold& a, const Manifold& b) {
  if (!(a == b)) throw InvalidInput("measures live on different manifolds");
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

DiscreteMeasure::DiscreteMeasure(Manifold M, std::vector<Atom> atoms) : manifold_(M) {
  if (atoms.empty()) throw InvalidInput("a probability measure needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    validate_point(M, a.point);
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
      throw InvalidInput("atom weights must be finite and nonnegative");
    }
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw InvalidInput("atom weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  atoms_ = canonicalize(M, std::move(atoms));
}

DiscreteMeasure DiscreteMeasure::uniform(Manifold M, const std::vector<Point>& points) {
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  const double w = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
  for (const auto& p : points) atoms.push_back({p, w});
  return DiscreteMeasure(M, std::move(atoms));
}

DiscreteMeasure DiscreteMeasure::dirac(Manifold M, Point x) {
  return DiscreteMeasure(M, {Atom{std::move(x), 1.0}});
}

std::vector<Point> DiscreteMeasure::points() const {
  std::vector<Point> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_) out.push_back(a.point);
  return out;
}

std::vector<double> DiscreteMeasure::weights() const {
  std::vector<double> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_) out.push_back(a.weight);
  return out;
}

double DiscreteMeasure::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
      d = std::max(d, distance_unchecked(manifold_, atoms_[i].point, atoms_[j].point));
    }
  }
  return d;
}

SignedPerturbation::SignedPerturbation(Manifold M, std::vector<SignedAtom> atoms) : manifold_(M) {
  double total = 0.0, abs_total = 0.0;
  for (const auto& a : atoms) {
    validate_point(M, a.point);
    if (!std::isfinite(a.weight)) throw InvalidInput("signed weights must be finite");
    total += a.weight;
    abs_total += std::abs(a.weight);
  }
  if (std::abs(total) > kMassTol * std::max(1.0, abs_total)) {
    throw InvalidInput("signed perturbation must have total mass 0");
  }
  atoms_ = std::move(atoms);
}

SignedPerturbation SignedPerturbation::difference(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu) {
  require_same_manifold(mu.manifold(), nu.manifold());
  std::vector<SignedAtom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.point, a.weight});
  for (const auto& b : nu.atoms()) {
    bool merged = false;
    for (auto& a : atoms) {
      if (distance_unchecked(mu.manifold(), a.point, b.point) <= DiscreteMeasure::kCoincidentTol) {
        a.weight -= b.weight;
        merged = true;
        break;
      }
    }
    if (!merged) atoms.push_back({b.point, -b.weight});
  }
  return SignedPerturbation(mu.manifold(), std::move(atoms));
}

double SignedPerturbation::weight_norm() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.weight * a.weight;
  return std::sqrt(s);
}

SignedPerturbation SignedPerturbation::scaled(double lambda) const {
  SignedPerturbation out = *this;
  for (auto& a : out.atoms_) a.weight *= lambda;
  return out;
}

bool SignedPerturbation::supported_on(const DiscreteMeasure& mu, double tol) const {
  if (!(mu.manifold() == manifold_)) return false;
  return std::all_of(atoms_.begin(), atoms_.end(), [&](const SignedAtom& a) {
    return std::any_of(mu.atoms().begin(), mu.atoms().end(), [&](const Atom& b) {
      return distance_unchecked(manifold_, a.point, b.point) <= tol;
    });
  });
}

DiscreteMeasure mix(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double t) {
  require_same_manifold(mu1.manifold(), mu2.manifold());
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("mixing parameter must lie in [0,1]");
  std::vector<Atom> atoms;
  atoms.reserve(mu1.size() + mu2.size());
  for (const auto& a : mu1.atoms()) {
    if ((1.0 - t) * a.weight > 0.0) atoms.push_back({a.point, (1.0 - t) * a.weight});
  }
  for (const auto& a : mu2.atoms()) {
    if (t * a.weight > 0.0) atoms.push_back({a.point, t * a.weight});
  }
  return DiscreteMeasure(mu1.manifold(), std::move(atoms));
}

bool bottleneck_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double threshold) {
  require_same_manifold(mu.manifold(), nu.manifold());
  const int n = static_cast<int>(mu.size());
  const int m = static_cast<int>(nu.size());
  const int source = n + m;
  const int sink = n + m + 1;
  FlowNetwork net(n + m + 2);
  double mass_mu = 0.0, mass_nu = 0.0;
  for (int i = 0; i < n; ++i) {
    net.add_edge(source, i, mu[i].weight);
    mass_mu += mu[i].weight;
  }
  for (int j = 0; j < m; ++j) {
    net.add_edge(n + j, sink, nu[j].weight);
    mass_nu += nu[j].weight;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (distance_unchecked(mu.manifold(), mu[i].point, nu[j].point) <= threshold) {
        net.add_edge(i, n + j, std::numeric_limits<double>::infinity());
      }
    }
  }
  return net.max_flow(source, sink) >= std::min(mass_mu, mass_nu) - 1e-10;
}

double d_infinity(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_same_manifold(mu.manifold(), nu.manifold());
  double mass_mu = 0.0, mass_nu = 0.0;
  for (const auto& a : mu.atoms()) mass_mu += a.weight;
  for (const auto& a : nu.atoms()) mass_nu += a.weight;
  if (std::abs(mass_mu - mass_nu) > 1e-10) throw InvalidInput("d_infinity needs equal total masses");

  std::vector<double> candidates{0.0};
  for (const auto& a : mu.atoms()) {
    for (const auto& b : nu.atoms()) {
      candidates.push_back(distance_unchecked(mu.manifold(), a.point, b.point));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // The largest candidate admits every pair and is always feasible.
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (bottleneck_feasible(mu, nu, candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

std::vector<Cluster> support_clusters(const DiscreteMeasure& mu, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("cluster scale eps must be positive");
  const std::size_t n = mu.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance_unchecked(mu.manifold(), mu[i].point, mu[j].point) <= eps) sets.unite(i, j);
    }
  }
  std::vector<Cluster> clusters;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(i);
  }
  return clusters;
}

double cluster_diameter(const DiscreteMeasure& mu, const Cluster& cluster) {
  double d = 0.0;
  for (std::size_t a = 0; a < cluster.size(); ++a) {
    for (std::size_t b = a + 1; b < cluster.size(); ++b) {
      d = std::max(d, distance_unchecked(mu.manifold(), mu[cluster[a]].point, mu[cluster[b]].point));
    }
  }
  return d;
}

Point riemannian_barycenter(const Manifold& M, const std::vector<Point>& points,
                            const std::vector<double>& weights, double tol, int max_iters) {
  if (points.empty() || points.size() != weights.size()) {
    throw InvalidInput("barycenter needs matching nonempty points and weights");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (M.kind == ManifoldKind::euclidean) {
    Point mean = Point::Zero(points.front().size());
    if (total > 0.0) {
      for (std::size_t i = 0; i < points.size(); ++i) mean += (weights[i] / total) * points[i];
    } else {
      for (const auto& p : points) mean += p / static_cast<double>(points.size());
    }
    return mean;
  }
  const auto heaviest = std::max_element(weights.begin(), weights.end()) - weights.begin();
  Point x = points[static_cast<std::size_t>(heaviest)];
  for (int it = 0; it < max_iters; ++it) {
    Tangent v = Tangent::Zero(x.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double w = total > 0.0 ? weights[i] / total : 1.0 / static_cast<double>(points.size());
      if (w > 0.0) v += w * log_map(M, x, points[i]);
    }
    if (tangent_norm(M, x, v) <= tol) return x;
    x = exp_map(M, x, v);
  }
  throw DegenerateCluster("barycenter iteration did not converge in " + std::to_string(max_iters) +
                          " steps");
}

DiscreteMeasure merge_atoms(const DiscreteMeasure& mu, double eps) {
  const auto clusters = support_clusters(mu, eps);
  if (clusters.size() == mu.size()) return mu;
  std::vector<Atom> merged;
  merged.reserve(clusters.size());
  for (const auto& cluster : clusters) {
    if (cluster.size() == 1) {
      merged.push_back(mu[cluster.front()]);
      continue;
    }
    if (cluster_diameter(mu, cluster) >= mu.manifold().injectivity_radius() - kAntipodalTol) {
      throw DegenerateCluster("cluster diameter reaches the injectivity radius");
    }
    std::vector<Point> pts;
    std::vector<double> ws;
    double mass = 0.0;
    for (const std::size_t i : cluster) {
      pts.push_back(mu[i].point);
      ws.push_back(mu[i].weight);
      mass += mu[i].weight;
    }
    merged.push_back({riemannian_barycenter(mu.manifold(), pts, ws), mass});
  }
  return DiscreteMeasure(mu.manifold(), std::move(merged));
}

}  // namespace repulsion
