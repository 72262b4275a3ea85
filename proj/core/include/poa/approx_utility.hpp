#pragma once

#include <span>
#include <vector>

#include "poa/greedy_auction.hpp"
#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"

namespace poa {

/// A player's price-taking view of one auction outcome: thresholds are
/// computed from the opponents' bids only, so the player's own bids never
/// move the prices he imagines paying.
struct ApproxUtilityResult {
  std::vector<int> imagined_alloc;
  std::vector<double> imagined_prices;
  double value = 0.0;
};

/// Per good, the threshold is the (k_j+1)-th highest marginal among the
/// others' bids; the player's strictly higher marginals win and equal ones
/// go through the same per-good tie-break order as the real mechanism.
ApproxUtilityResult uniform_approx_utility(const UniformBids& bids, const Valuation& v,
                                           int player, std::span<const int> supply,
                                           const std::vector<TieBreakOrder>& orders);
ApproxUtilityResult uniform_approx_utility(const UniformBids& bids, const Valuation& v,
                                           int player, std::span<const int> supply,
                                           RngStream& rng);

/// Expected approximate utility over tie-break orders (everyone present).
double exact_approx_utility_uniform(const UniformBids& bids, std::span<const int> supply,
                                    const Valuation& v, int player, long joint_cap = 200000);

/// Greedy form: the imagined price is the critical price of the player's
/// declared set with his own bids removed; strictly higher marginals count.
ApproxUtilityResult greedy_approx_utility(const GreedyBids& bids, const Valuation& v, int player,
                                          std::span<const int> supply,
                                          const TiePriority& priority);

/// E[z_i * U_i(b restricted to arrivals)]. Exact mode enumerates the
/// others' arrival patterns (players <= 20); uniform tie-breaks are taken
/// in exact expectation, greedy ties use one priority drawn up front and
/// shared across all arrival patterns.
Estimate noisy_approx_utility(const UniformBids& bids, const Valuation& v, int player,
                              const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                              long trials, RngStream& rng);
Estimate noisy_approx_utility(const GreedyBids& bids, const Valuation& v, int player,
                              const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                              long trials, RngStream& rng);

Estimate noisy_expected_utility(const GreedyBids& bids, const Valuation& v, int player,
                                const MarketConfig& cfg, std::span<const int> supply,
                                EvalMode mode, long trials, RngStream& rng);

/// |u_i - U_i| under noisy arrival, both sides evaluated on shared arrival
/// vectors and tie-breaks. `value` is |mean difference|, `se` the standard
/// error of the difference.
Estimate utility_gap_uniform(const UniformBids& bids, const Valuation& v, int player,
                             const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                             long trials, RngStream& rng);
Estimate utility_gap_greedy(const GreedyBids& bids, const Valuation& v, int player,
                            const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                            long trials, RngStream& rng);

}  // namespace poa
