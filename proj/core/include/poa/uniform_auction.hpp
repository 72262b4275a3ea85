#pragma once

#include <span>
#include <vector>

#include "poa/market.hpp"

namespace poa {

/// Permutation of player indices; earlier players win ties first.
using TieBreakOrder = std::vector<int>;

enum class EvalMode { Exact, MonteCarlo };

struct SingleGoodResult {
  std::vector<int> alloc;  // units per player
  double price = 0.0;      // (k+1)-th highest marginal bid, 0 if absent
};

/// One uniform price auction. `marginals` is players x cap, row-major and
/// non-increasing per player; the k highest marginal bids win and ties at
/// the threshold are filled bidder by bidder in `order`.
SingleGoodResult run_single_good(std::span<const double> marginals, int players, int cap,
                                 int units, const TieBreakOrder& order);

struct UniformOutcome {
  int players = 0;
  int goods = 0;
  std::vector<int> alloc;       // players x goods
  std::vector<double> price;    // per good
  std::vector<double> payments; // per player
  double revenue = 0.0;
  double welfare = 0.0;  // filled by fill_welfare

  int alloc_at(int player, int good) const {
    return alloc[static_cast<std::size_t>(player) * goods + good];
  }
  std::span<const int> bundle(int player) const {
    return {alloc.data() + static_cast<std::size_t>(player) * goods,
            static_cast<std::size_t>(goods)};
  }
};

UniformOutcome run_simultaneous(const UniformBids& bids, std::span<const int> supply,
                                const std::vector<TieBreakOrder>& orders);
UniformOutcome run_simultaneous(const UniformBids& bids, std::span<const int> supply,
                                RngStream& rng);

double fill_welfare(UniformOutcome& out, std::span<const Valuation> valuations);

double utility(const UniformOutcome& out, const Valuation& v, int player);

/// Expected utility over tie-break orders only (arrival fixed, everyone
/// present). Exact; throws CapacityError if the joint allocation support
/// across goods exceeds `joint_cap`.
double exact_utility_uniform(const UniformBids& bids, std::span<const int> supply,
                             const Valuation& v, int player, long joint_cap = 200000);

/// Distribution of `player`'s unit count in a single-good auction, exact
/// over tie-break orders.
std::vector<std::pair<int, double>> exact_alloc_distribution(std::span<const double> marginals,
                                                             int players, int cap, int units,
                                                             int player);

/// Distribution of a player's tie wins when `remaining` units are filled
/// bidder by bidder in a uniform order of the tied players; `other_tied`
/// holds the tied-bid counts of the other tied players.
std::vector<std::pair<int, double>> tie_win_distribution(int own_tied,
                                                         std::span<const int> other_tied,
                                                         int remaining);

/// E[z_i * u_i(b restricted to arrivals)] with arrival-failure probability
/// cfg.delta. Exact mode enumerates the 2^(n-1) arrival patterns of the
/// others (requires players <= 20) and tie-break orders exactly; MonteCarlo
/// returns a mean with standard error.
Estimate noisy_expected_utility(const UniformBids& bids, const Valuation& v, int player,
                                const MarketConfig& cfg, std::span<const int> supply,
                                EvalMode mode, long trials, RngStream& rng);

/// Keeps the rows of `players_kept` (in order); used to drop absent players.
UniformBids restrict_bids(const UniformBids& bids, std::span<const int> players_kept);

}  // namespace poa
