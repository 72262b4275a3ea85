#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "poa/approx_utility.hpp"
#include "poa/greedy_auction.hpp"
#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"
#include "poa/welfare.hpp"

namespace poa {

struct RateInputs {
  double epsilon = 0.1;
  double delta = 0.5;
  int goods = 1;
  double bid_cap = 1.0;
  double value_cap = 1.0;
  int demand_cap = 1;
  double value_floor = 1.0;
};

/// Least per-good supply for the single-unit-demand rate guarantee:
/// ceil(36 rho^2 m^2 (B+H)^2 / (eps^2 delta (1-delta))).
long required_supply_r1(const RateInputs& in);

/// General demand cap: ceil(16 m^2 (B+H)^2 r^8 rho^2 / (eps^2 delta (1-delta)) + r).
long required_supply_general(const RateInputs& in);

/// Normal-approximation cap on any Binomial(t, p) point mass: 2/sqrt(t p (1-p)).
double binomial_pmf_bound(long t, double p);

enum class UtilityKind { True, Approximate };

struct SmoothnessReport {
  double lambda = 1.0;
  double mu = 1.0;
  long profiles_tested = 0;
  double min_slack = 0.0;
  double opt_value = 0.0;
  double epsilon_hat = 0.0;  // max(0, -min_slack) / (lambda * opt)
  UniformBids worst_uniform;
  GreedyBids worst_greedy;
};

/// Bid v_i(x_i*) on the first x_i^{j,*} marginals of each good, 0 elsewhere.
/// Throws BidCapError when some v_i(x_i*) exceeds the bid cap.
UniformBids uniform_deviation(std::span<const Valuation> valuations, const OptResult& opt,
                              const MarketConfig& cfg);

/// Marginal differences of each single-minded value curve on its interest
/// set. Non-concave curves are replaced by their least concave majorant so
/// the marginals are non-increasing; *concavified reports whether that
/// happened anywhere.
GreedyBids greedy_truthful_deviation(std::span<const Valuation> valuations, int cap,
                                     bool* concavified = nullptr);

/// Randomized deviation for noisy-arrival markets: sample the others'
/// arrivals, solve for the optimum of the sampled sub-market, and bid the
/// uniform deviation for that optimum.
class RandomProxyDeviation {
 public:
  RandomProxyDeviation(std::vector<Valuation> valuations, MarketConfig cfg,
                       std::vector<int> supply, long node_budget = 10'000'000);

  /// One sampled deviation row for `player` (goods x cap values).
  std::vector<double> sample_bids(int player, RngStream& rng) const;

 private:
  std::vector<Valuation> valuations_;
  MarketConfig cfg_;
  std::vector<int> supply_;
  long node_budget_;
};

struct GridProfileSource {
  double step;  // bid grid spacing; levels are {0, step, ..., B}
};
struct RandomProfileSource {
  long count;
};

/// Checks sum_i U_i(dev_i, b_{-i}) >= lambda*OPT - mu*R(b) over a profile
/// battery; reports the smallest slack and its witness profile.
SmoothnessReport check_smoothness_uniform(UtilityKind kind, double lambda, double mu,
                                          std::span<const Valuation> valuations,
                                          const MarketConfig& cfg, std::span<const int> supply,
                                          const UniformBids& deviation,
                                          const GridProfileSource* grid,
                                          const RandomProfileSource* random, RngStream& rng);

SmoothnessReport check_smoothness_greedy(UtilityKind kind, double lambda, double mu,
                                         std::span<const Valuation> valuations,
                                         const MarketConfig& cfg, std::span<const int> supply,
                                         const GreedyBids& deviation,
                                         std::span<const std::vector<int>> declared_sets,
                                         const GridProfileSource* grid,
                                         const RandomProfileSource* random, RngStream& rng);

struct TailEstimate {
  std::vector<double> pmf;  // index q -> empirical Pr[B(b.z; x) = q]
  std::vector<double> se;
  long trials = 0;
};

/// Empirical distribution of the number of arriving marginal bids strictly
/// above x, over arrival draws.
TailEstimate tail_estimator(const UniformBids& bids, double x, const MarketConfig& cfg,
                            long trials, RngStream& rng);

}  // namespace poa
