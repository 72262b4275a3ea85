#pragma once

#include <span>
#include <vector>

#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"

namespace poa {

/// One global priority per (player, marginal) pair; among equal bid values,
/// lower priority is considered first. The same priority is used for the
/// real run and every shadow run so critical prices are well defined.
struct TiePriority {
  std::vector<std::uint64_t> rank;  // indexed like the flattened bid list
};

TiePriority draw_tie_priority(const GreedyBids& bids, RngStream& rng);

struct AcceptanceRecord {
  int player = -1;
  int index = -1;  // marginal index within the player's bid
  bool accepted = false;
};

struct GreedyOutcome {
  std::vector<int> alloc;          // copies of T_i received
  std::vector<double> critical;    // per-unit critical price per player
  std::vector<double> payments;
  double revenue = 0.0;
  std::vector<AcceptanceRecord> trace;  // in consideration order
  TiePriority priority;
};

GreedyOutcome run_greedy(const GreedyBids& bids, std::span<const int> supply,
                         const TiePriority& priority);
GreedyOutcome run_greedy(const GreedyBids& bids, std::span<const int> supply, RngStream& rng);

/// t-th highest accepted bid on sets containing `good` when that good's
/// supply is idealized as infinite; 0 if fewer than t such bids. Pass
/// `skip_player` >= 0 to remove that player's bids first.
double shadow_threshold(int good, int level, const GreedyBids& bids, std::span<const int> supply,
                        const TiePriority& priority, int skip_player = -1);

/// max over the player's interest set of shadow_threshold at level k_j + 1.
double critical_price(int player, const GreedyBids& bids, std::span<const int> supply,
                      const TiePriority& priority);

/// Same, with `skip_player`'s bids removed (used by the approximate utility;
/// the interest set is still taken from `player`'s bid).
double critical_price_excluding(int player, int skip_player, const GreedyBids& bids,
                                std::span<const int> supply, const TiePriority& priority);

/// Value of `alloc` copies of the player's declared set minus the payment.
double greedy_utility(const GreedyBids& bids, const GreedyOutcome& out, const Valuation& v,
                      int player);

/// Expectation of the player's utility over supply draws. Exact mode
/// enumerates the supply support (capacity 10^4 vectors); ties are resolved
/// by `tie_trials` sampled priorities per supply point.
Estimate expected_utility_over_supply(const GreedyBids& bids, const Valuation& v, int player,
                                      const SupplyModel& model, EvalMode mode, long trials,
                                      RngStream& rng, int tie_trials = 1);

GreedyBids restrict_bids(const GreedyBids& bids, std::span<const int> players_kept);
TiePriority restrict_priority(const TiePriority& priority, const GreedyBids& bids,
                              std::span<const int> players_kept);

}  // namespace poa
