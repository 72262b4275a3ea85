#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poa/rng.hpp"

namespace poa {

/// Thrown when an exact computation exceeds its stated enumeration budget.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a smoothness deviation would need a bid above the cap B.
struct BidCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// z[i] = 1 means player i arrives.
using ArrivalVector = std::vector<std::uint8_t>;

/// Per-good supply: fixed counts or independent uniform integers.
class SupplyModel {
 public:
  SupplyModel() = default;

  static SupplyModel fixed(std::vector<int> units);
  static SupplyModel uniform_integer(std::vector<int> lo, std::vector<int> hi);

  int goods() const { return static_cast<int>(lo_.size()); }
  bool is_fixed() const { return fixed_; }
  const std::vector<int>& fixed_units() const;
  const std::vector<int>& lower() const { return lo_; }
  const std::vector<int>& upper() const { return hi_; }

  std::vector<int> sample(RngStream& rng) const;

  /// Number of distinct supply vectors (saturates at LONG_MAX / 4).
  long support_size() const;

  /// Visits every supply vector in the support with its probability.
  void for_each_support(const std::function<void(std::span<const int>, double)>& fn) const;

 private:
  bool fixed_ = true;
  std::vector<int> lo_, hi_;
};

struct MarketConfig {
  int players = 1;
  int goods = 1;
  SupplyModel supply = SupplyModel::fixed({1});
  double delta = 0.0;       // arrival-failure probability, in [0, 1)
  int demand_cap = 1;       // r: per-good unit cap
  double bid_cap = 1.0;     // B
  double value_cap = 1.0;   // H
  double value_floor = 1.0; // rho: least value of a nonzero bundle

  void validate() const;  // throws std::invalid_argument
};

/// A player's preferences. Values are always evaluated on the bundle
/// clamped to the demand cap, so v(x) = v(min(x, r)) by construction.
class Valuation {
 public:
  enum class Kind { CappedCombinatorial, SingleMinded, UnitDemand };

  using Oracle = std::function<double(std::span<const int>)>;

  /// Black-box combinatorial oracle over clamped bundles.
  static Valuation capped_combinatorial(int goods, int cap, Oracle oracle);

  /// Value curve over copies of an interest set; curve[0] must be 0 and the
  /// curve nondecreasing. Copies of the set = min over the set of the
  /// clamped allocation.
  static Valuation single_minded(int goods, int cap, std::vector<int> interest,
                                 std::vector<double> curve);

  /// One unit wanted overall; value of a bundle is the best per-good value
  /// among goods with at least one unit.
  static Valuation unit_demand(std::vector<double> per_good_value);

  double eval(std::span<const int> bundle) const;

  Kind kind() const { return kind_; }
  int goods() const { return goods_; }
  int cap() const { return cap_; }
  const std::vector<int>& interest() const { return interest_; }
  const std::vector<double>& curve() const { return curve_; }
  const std::vector<double>& unit_values() const { return curve_; }

  /// Value of the all-caps bundle; an upper bound for monotone valuations.
  double full_bundle_value() const;

 private:
  Kind kind_ = Kind::UnitDemand;
  int goods_ = 0;
  int cap_ = 1;
  Oracle oracle_;
  std::vector<int> interest_;
  std::vector<double> curve_;  // single-minded curve or unit-demand values
};

double eval_valuation(const Valuation& v, std::span<const int> bundle);

/// Probe-based check of the valuation contract (range, zero bundle, floor,
/// clamp idempotence). Returns human-readable violations; empty means clean.
std::vector<std::string> validate_valuation(const Valuation& v, const MarketConfig& cfg,
                                            RngStream& rng, int probes = 100);

/// Marginal bids for the uniform price auction: players x goods x cap,
/// non-increasing in the marginal index.
struct UniformBids {
  int players = 0;
  int goods = 0;
  int cap = 0;
  std::vector<double> values;  // row-major [player][good][marginal]

  static UniformBids zeros(int players, int goods, int cap);

  double& at(int player, int good, int marginal) {
    return values[(static_cast<std::size_t>(player) * goods + good) * cap + marginal];
  }
  double at(int player, int good, int marginal) const {
    return values[(static_cast<std::size_t>(player) * goods + good) * cap + marginal];
  }
  std::span<const double> good_row(int player, int good) const {
    return {values.data() + (static_cast<std::size_t>(player) * goods + good) * cap,
            static_cast<std::size_t>(cap)};
  }
};

/// One player's greedy-auction bid: an interest set and non-increasing
/// marginal bids for successive copies of it.
struct GreedyBid {
  std::vector<int> interest;
  std::vector<double> marginals;
};

struct GreedyBids {
  int goods = 0;
  std::vector<GreedyBid> bids;

  int players() const { return static_cast<int>(bids.size()); }
  int max_set_size() const;
  int total_marginals() const;
};

struct BidViolation {
  enum class Kind { Monotonicity, Range, EmptyInterest, BadGood };
  Kind kind;
  int player = -1;
  int good = -1;
  int index = -1;
};

std::vector<BidViolation> validate_bid_profile(const UniformBids& b, const MarketConfig& cfg);
std::vector<BidViolation> validate_bid_profile(const GreedyBids& b, const MarketConfig& cfg);

ArrivalVector sample_arrival(double delta, int players, RngStream& rng);
std::vector<int> sample_supply(const SupplyModel& model, RngStream& rng);

}  // namespace poa
