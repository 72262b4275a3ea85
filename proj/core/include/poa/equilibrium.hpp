#pragma once

#include <memory>
#include <span>
#include <vector>

#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"

namespace poa {

/// Finite strategy game with possibly stochastic payoffs. Samples must be
/// unbiased draws of the expected utility; `utility_exact` may be provided
/// when the expectation has a closed form.
class Game {
 public:
  virtual ~Game() = default;
  virtual int num_players() const = 0;
  virtual int num_actions(int player) const = 0;
  virtual double utility_sample(int player, std::span<const int> actions,
                                RngStream& rng) const = 0;
  virtual bool has_exact() const { return false; }
  virtual double utility_exact(int player, std::span<const int> actions) const;
  virtual double welfare_sample(std::span<const int> actions, RngStream& rng) const = 0;
};

struct EquilibriumReport {
  double max_regret = 0.0;
  int worst_player = -1;
  int worst_action = -1;
  Estimate welfare;
  Estimate opt;
  Estimate poa;
};

/// Best unilateral improvement over each player's full action grid.
EquilibriumReport verify_candidate_equilibrium(const Game& game, std::span<const int> candidate,
                                               EvalMode mode, long trials, RngStream& rng);

struct LearningResult {
  std::vector<double> avg_regret;  // external regret per player, per round
  double max_avg_regret = 0.0;
  Estimate welfare;  // time-averaged realized welfare
  long rounds = 0;
  std::vector<std::vector<double>> avg_strategy;
};

/// Hedge / multiplicative weights with full-information feedback against
/// the realized opponent actions. `eta <= 0` picks sqrt(8 ln K / T) scaled
/// by the payoff range.
LearningResult regret_learning(const Game& game, long rounds, double eta, double payoff_range,
                               RngStream& rng);

/// Ratio of expectations with first-order error propagation.
Estimate estimate_poa(const Estimate& opt, const Estimate& welfare);

struct Example1Report {
  Estimate welfare_per_capita;
  Estimate opt_per_capita;
  Estimate poa;
  double max_regret = 0.0;       // over the sampled deviation grid, ex post
  long price_violations = 0;     // draws where the candidate price was not 0
  long alloc_violations = 0;     // draws where someone won != 1 unit
};

/// k-unit, k-bidder single-good market; bidders draw two values uniformly
/// from [2,3], bid the larger truthfully and 0 for the second unit.
Example1Report scenario_example1(int k, long trials, RngStream& rng);

struct SupplyExampleReport {
  Estimate poa;
  Estimate welfare_over_t;
  Estimate opt_over_t;
  Estimate overlap_integral;  // E[(x + y - 1)+] for the two-good case
  double candidate_utility = 0.0;
  double small_t_max_regret = 0.0;
};

/// Two goods, populations of t half-value specialists per good and t
/// unit-value flexible players split evenly, supply uniform on {0..t}.
SupplyExampleReport scenario_supply_counterexample(int t, long trials, long integral_trials,
                                                   RngStream& rng);

/// m-good extension: supply uniform on {0..2t/m} per good, flexible players
/// pick one good uniformly at random, t half-value specialists per good.
SupplyExampleReport scenario_supply_counterexample_m(int t, int goods, long trials,
                                                     RngStream& rng);

/// Exact regret of the two-good candidate profile for a flexible player over
/// the bid grid {0, 1/2, 1} on both goods, at a small even t.
double supply_example_small_t_regret(int t);

/// Exact expected utility of the candidate strategy for a flexible player.
double supply_example_candidate_utility(int t);

}  // namespace poa
