#pragma once

#include <functional>
#include <span>
#include <vector>

#include "poa/market.hpp"

namespace poa {

/// Edge latency as a function of the load fraction in [0, 1].
class Latency {
 public:
  static Latency affine(double slope, double intercept);
  static Latency monomial(double coef, int degree);
  static Latency table(std::vector<double> samples);  // piecewise linear on [0,1]

  double operator()(double x) const;
  bool nondecreasing_on_unit(int grid = 101) const;

  enum class Kind { Affine, Monomial, Table };
  Kind kind() const { return kind_; }
  int degree() const { return degree_; }

 private:
  Kind kind_ = Kind::Affine;
  double a_ = 0.0, b_ = 0.0, coef_ = 0.0;
  int degree_ = 1;
  std::vector<double> samples_;
};

/// Unsplittable-flow routing game over explicit path sets; every player
/// routes 1/n of the total flow.
struct RoutingGame {
  std::vector<Latency> edges;
  std::vector<std::vector<std::vector<int>>> paths;  // paths[i][p] = edge list
  int players = 0;

  void validate() const;
  static RoutingGame parallel_links(std::vector<Latency> links, int players);
};

double social_cost(const RoutingGame& game, std::span<const int> profile);
double player_cost(const RoutingGame& game, std::span<const int> profile, int player);

/// Cost with the player's own flow removed from every edge he uses.
double approx_cost(const RoutingGame& game, std::span<const int> profile, int player);

struct SmoothConstants {
  double lambda = 1.0;
  double mu = 0.0;
};

SmoothConstants smoothness_constants_affine();
SmoothConstants smoothness_constants_monomial(int degree);

/// min over the [0,1]^2 grid of lambda*x*c(x) + mu*y*c(y) - x*c(y).
double check_pairwise_condition(const Latency& c, double lambda, double mu, int grid);

struct DescentResult {
  std::vector<int> profile;
  bool converged = false;
  long moves = 0;
};

/// Sequential best-response sweeps from `initial`; stops when no player can
/// strictly improve by more than `tol`. Deterministic given the start.
DescentResult best_response_equilibrium(const RoutingGame& game, std::span<const int> initial,
                                        long move_cap = 1'000'000, double tol = 1e-12);
DescentResult best_response_equilibrium(const RoutingGame& game, RngStream& rng,
                                        long move_cap = 1'000'000, double tol = 1e-12);

double rosenthal_potential(const RoutingGame& game, std::span<const int> profile);
bool is_pure_nash(const RoutingGame& game, std::span<const int> profile, double tol = 1e-12);

struct PoARow {
  int players = 0;
  double worst_equilibrium_cost = 0.0;
  double opt_cost = 0.0;
  double ratio = 1.0;
};

/// Exhaustive worst pure equilibrium and optimum per market size; the
/// profile space must stay within `profile_budget`.
std::vector<PoARow> poa_convergence(const std::function<RoutingGame(int)>& family,
                                    std::span<const int> sizes, long profile_budget = 20'000'000);

/// Continuous per-link relaxation of the optimum for parallel-link games
/// (grid search); a cross-check lower bound, never the reported optimum.
double parallel_links_continuous_opt(const RoutingGame& game, int grid = 4096);

}  // namespace poa
