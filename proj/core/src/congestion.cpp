#include "poa/congestion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poa {

Latency Latency::affine(double slope, double intercept) {
  if (slope < 0.0 || intercept < 0.0)
    throw std::invalid_argument("Latency::affine: coefficients must be nonnegative");
  Latency c;
  c.kind_ = Kind::Affine;
  c.a_ = slope;
  c.b_ = intercept;
  return c;
}

Latency Latency::monomial(double coef, int degree) {
  if (coef < 0.0) throw std::invalid_argument("Latency::monomial: coefficient must be nonnegative");
  if (degree < 1) throw std::invalid_argument("Latency::monomial: degree must be >= 1");
  Latency c;
  c.kind_ = Kind::Monomial;
  c.coef_ = coef;
  c.degree_ = degree;
  return c;
}

Latency Latency::table(std::vector<double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("Latency::table: need >= 2 samples");
  Latency c;
  c.kind_ = Kind::Table;
  c.samples_ = std::move(samples);
  return c;
}

double Latency::operator()(double x) const {
  switch (kind_) {
    case Kind::Affine:
      return a_ * x + b_;
    case Kind::Monomial:
      return coef_ * std::pow(x, degree_);
    case Kind::Table: {
      const double clamped = std::clamp(x, 0.0, 1.0);
      const double pos = clamped * (samples_.size() - 1);
      const std::size_t lo = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
      const double frac = pos - static_cast<double>(lo);
      return samples_[lo] * (1.0 - frac) + samples_[lo + 1] * frac;
    }
  }
  return 0.0;
}

bool Latency::nondecreasing_on_unit(int grid) const {
  double prev = (*this)(0.0);
  for (int g = 1; g < grid; ++g) {
    const double cur = (*this)(static_cast<double>(g) / (grid - 1));
    if (cur < prev - 1e-12) return false;
    prev = cur;
  }
  return true;
}

void RoutingGame::validate() const {
  if (players < 1) throw std::invalid_argument("RoutingGame: players >= 1 required");
  if (static_cast<int>(paths.size()) != players)
    throw std::invalid_argument("RoutingGame: one path set per player required");
  for (const auto& set : paths) {
    if (set.empty()) throw std::invalid_argument("RoutingGame: empty path set");
    for (const auto& path : set) {
      if (path.empty()) throw std::invalid_argument("RoutingGame: empty path");
      for (int e : path)
        if (e < 0 || e >= static_cast<int>(edges.size()))
          throw std::invalid_argument("RoutingGame: edge index out of range");
    }
  }
  for (const Latency& c : edges)
    if (!c.nondecreasing_on_unit())
      throw std::invalid_argument("RoutingGame: latencies must be nondecreasing on [0,1]");
}

RoutingGame RoutingGame::parallel_links(std::vector<Latency> links, int players) {
  RoutingGame g;
  g.players = players;
  std::vector<std::vector<int>> options;
  for (std::size_t e = 0; e < links.size(); ++e) options.push_back({static_cast<int>(e)});
  g.edges = std::move(links);
  g.paths.assign(players, options);
  return g;
}

namespace {

std::vector<int> edge_loads(const RoutingGame& game, std::span<const int> profile) {
  std::vector<int> load(game.edges.size(), 0);
  for (int i = 0; i < game.players; ++i)
    for (int e : game.paths[i][profile[i]]) ++load[e];
  return load;
}

}  // namespace

double social_cost(const RoutingGame& game, std::span<const int> profile) {
  const std::vector<int> load = edge_loads(game, profile);
  double total = 0.0;
  const double n = game.players;
  for (std::size_t e = 0; e < load.size(); ++e)
    if (load[e] > 0) total += load[e] * game.edges[e](load[e] / n);
  return total;
}

double player_cost(const RoutingGame& game, std::span<const int> profile, int player) {
  const std::vector<int> load = edge_loads(game, profile);
  double total = 0.0;
  const double n = game.players;
  for (int e : game.paths[player][profile[player]]) total += game.edges[e](load[e] / n);
  return total;
}

double approx_cost(const RoutingGame& game, std::span<const int> profile, int player) {
  const std::vector<int> load = edge_loads(game, profile);
  double total = 0.0;
  const double n = game.players;
  for (int e : game.paths[player][profile[player]])
    total += game.edges[e]((load[e] - 1) / n);
  return total;
}

SmoothConstants smoothness_constants_affine() { return {1.0, 0.25}; }

SmoothConstants smoothness_constants_monomial(int degree) {
  if (degree < 1)
    throw std::invalid_argument("smoothness_constants_monomial: degree must be >= 1");
  const double d = degree;
  return {1.0, d * std::pow(d + 1.0, -(d + 1.0) / d)};
}

double check_pairwise_condition(const Latency& c, double lambda, double mu, int grid) {
  double min_slack = std::numeric_limits<double>::infinity();
  for (int gx = 0; gx < grid; ++gx) {
    const double x = static_cast<double>(gx) / (grid - 1);
    const double xcx = lambda * x * c(x);
    for (int gy = 0; gy < grid; ++gy) {
      const double y = static_cast<double>(gy) / (grid - 1);
      const double slack = xcx + mu * y * c(y) - x * c(y);
      min_slack = std::min(min_slack, slack);
    }
  }
  return min_slack;
}

namespace {

// Cost of switching player i to path p, with loads already computed.
double cost_on(const RoutingGame& game, const std::vector<int>& load, int player, int path,
               std::span<const int> profile) {
  const double n = game.players;
  double total = 0.0;
  for (int e : game.paths[player][path]) {
    int l = load[e];
    bool on_current = false;
    for (int cur : game.paths[player][profile[player]])
      if (cur == e) {
        on_current = true;
        break;
      }
    if (!on_current) ++l;  // joining this edge
    total += game.edges[e](l / n);
  }
  return total;
}

}  // namespace

DescentResult best_response_equilibrium(const RoutingGame& game, std::span<const int> initial,
                                        long move_cap, double tol) {
  DescentResult res;
  res.profile.assign(initial.begin(), initial.end());
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i < game.players; ++i) {
      const std::vector<int> load = edge_loads(game, res.profile);
      const double current = cost_on(game, load, i, res.profile[i], res.profile);
      int best_path = res.profile[i];
      double best_cost = current;
      for (int p = 0; p < static_cast<int>(game.paths[i].size()); ++p) {
        if (p == res.profile[i]) continue;
        const double c = cost_on(game, load, i, p, res.profile);
        if (c < best_cost - tol) {
          best_cost = c;
          best_path = p;
        }
      }
      if (best_path != res.profile[i]) {
        res.profile[i] = best_path;
        improved = true;
        if (++res.moves > move_cap) {
          res.converged = false;
          return res;
        }
      }
    }
  }
  res.converged = true;
  return res;
}

DescentResult best_response_equilibrium(const RoutingGame& game, RngStream& rng, long move_cap,
                                        double tol) {
  std::vector<int> initial(game.players);
  for (int i = 0; i < game.players; ++i)
    initial[i] = static_cast<int>(rng.below(game.paths[i].size()));
  return best_response_equilibrium(game, initial, move_cap, tol);
}

double rosenthal_potential(const RoutingGame& game, std::span<const int> profile) {
  const std::vector<int> load = edge_loads(game, profile);
  double total = 0.0;
  const double n = game.players;
  for (std::size_t e = 0; e < load.size(); ++e)
    for (int l = 1; l <= load[e]; ++l) total += game.edges[e](l / n);
  return total;
}

bool is_pure_nash(const RoutingGame& game, std::span<const int> profile, double tol) {
  const std::vector<int> load = edge_loads(game, profile);
  for (int i = 0; i < game.players; ++i) {
    const double current = cost_on(game, load, i, profile[i], profile);
    for (int p = 0; p < static_cast<int>(game.paths[i].size()); ++p) {
      if (p == profile[i]) continue;
      if (cost_on(game, load, i, p, profile) < current - tol) return false;
    }
  }
  return true;
}

std::vector<PoARow> poa_convergence(const std::function<RoutingGame(int)>& family,
                                    std::span<const int> sizes, long profile_budget) {
  std::vector<PoARow> rows;
  for (int n : sizes) {
    const RoutingGame game = family(n);
    game.validate();
    long space = 1;
    for (int i = 0; i < game.players; ++i) {
      space *= static_cast<long>(game.paths[i].size());
      if (space > profile_budget)
        throw CapacityError("poa_convergence: profile space exceeds the enumeration budget");
    }
    std::vector<int> profile(game.players, 0);
    double worst_ne = -std::numeric_limits<double>::infinity();
    double opt = std::numeric_limits<double>::infinity();
    while (true) {
      const double sc = social_cost(game, profile);
      opt = std::min(opt, sc);
      if (is_pure_nash(game, profile)) worst_ne = std::max(worst_ne, sc);
      int i = game.players - 1;
      while (i >= 0) {
        if (++profile[i] < static_cast<int>(game.paths[i].size())) break;
        profile[i] = 0;
        --i;
      }
      if (i < 0) break;
    }
    PoARow row;
    row.players = n;
    row.worst_equilibrium_cost = worst_ne;
    row.opt_cost = opt;
    row.ratio = worst_ne / opt;
    rows.push_back(row);
  }
  return rows;
}

double parallel_links_continuous_opt(const RoutingGame& game, int grid) {
  const int links = static_cast<int>(game.edges.size());
  if (links == 1) return game.edges[0](1.0);
  if (links != 2)
    throw std::invalid_argument("parallel_links_continuous_opt: implemented for <= 2 links");
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= grid; ++g) {
    const double x = static_cast<double>(g) / grid;
    best = std::min(best, x * game.edges[0](x) + (1.0 - x) * game.edges[1](1.0 - x));
  }
  return best;
}

}  // namespace poa
