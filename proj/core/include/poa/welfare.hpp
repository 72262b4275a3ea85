#pragma once

#include <functional>
#include <span>
#include <vector>

#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"

namespace poa {

enum class OptMethod { Exhaustive, BranchBound, ClosedForm, SortOracle };

struct OptResult {
  double value = 0.0;
  std::vector<int> alloc;  // players x goods witness
  OptMethod method = OptMethod::Exhaustive;

  std::span<const int> bundle(int player, int goods) const {
    return {alloc.data() + static_cast<std::size_t>(player) * goods,
            static_cast<std::size_t>(goods)};
  }
};

/// Exact welfare maximum by branch and bound over per-player candidate
/// bundles (dominated bundles pruned). Throws CapacityError past
/// `node_budget` search nodes. The witness is re-evaluated independently.
OptResult opt_exhaustive(std::span<const Valuation> valuations, std::span<const int> supply,
                         int cap, long node_budget = 10'000'000);

/// Exact optimum for all-single-minded valuations (copies per player).
OptResult opt_single_minded(std::span<const Valuation> valuations, std::span<const int> supply,
                            long node_budget = 10'000'000);

/// Two-good market with t unit-value players wanting one unit of either
/// good and ample half-value players per good: min(kA+kB, t) + (kA+kB-t)+/2.
double closed_form_supply_example_opt(int t, int k_a, int k_b);

/// Single good, non-increasing per-player marginal value lists: the optimum
/// is the sum of the `units` highest pooled marginals.
double opt_pooled_marginals(const std::vector<std::vector<double>>& marginals, int units);

/// Expected optimum when each player is independently absent with
/// probability delta. Exact mode enumerates arrival patterns (players <= 20).
Estimate expected_opt_arrival(std::span<const Valuation> valuations, double delta,
                              std::span<const int> supply, int cap, EvalMode mode, long trials,
                              RngStream& rng, long node_budget = 10'000'000);

/// Expected per-realization optimum over supply draws.
Estimate expected_opt_supply(const std::function<double(std::span<const int>)>& opt_of_supply,
                             const SupplyModel& model, EvalMode mode, long trials,
                             RngStream& rng);

}  // namespace poa
