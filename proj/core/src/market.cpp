#include "poa/market.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

namespace poa {

double RunningStat::stderror() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

SupplyModel SupplyModel::fixed(std::vector<int> units) {
  SupplyModel m;
  m.fixed_ = true;
  m.lo_ = units;
  m.hi_ = std::move(units);
  return m;
}

SupplyModel SupplyModel::uniform_integer(std::vector<int> lo, std::vector<int> hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("SupplyModel: bound vectors differ in length");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (lo[j] < 0 || lo[j] > hi[j])
      throw std::invalid_argument("SupplyModel: need 0 <= lo <= hi per good");
  }
  SupplyModel m;
  m.fixed_ = false;
  m.lo_ = std::move(lo);
  m.hi_ = std::move(hi);
  return m;
}

const std::vector<int>& SupplyModel::fixed_units() const {
  if (!fixed_) throw std::logic_error("SupplyModel: not a fixed supply");
  return lo_;
}

std::vector<int> SupplyModel::sample(RngStream& rng) const {
  if (fixed_) return lo_;
  std::vector<int> k(lo_.size());
  for (std::size_t j = 0; j < lo_.size(); ++j)
    k[j] = static_cast<int>(rng.uniform_int(lo_[j], hi_[j]));
  return k;
}

long SupplyModel::support_size() const {
  long total = 1;
  const long cap = LONG_MAX / 4;
  for (std::size_t j = 0; j < lo_.size(); ++j) {
    const long width = static_cast<long>(hi_[j]) - lo_[j] + 1;
    if (total > cap / width) return cap;
    total *= width;
  }
  return total;
}

void SupplyModel::for_each_support(
    const std::function<void(std::span<const int>, double)>& fn) const {
  std::vector<int> k(lo_);
  double prob = 1.0;
  for (std::size_t j = 0; j < lo_.size(); ++j)
    prob /= static_cast<double>(hi_[j] - lo_[j] + 1);
  while (true) {
    fn(k, prob);
    std::size_t j = 0;
    while (j < k.size()) {
      if (k[j] < hi_[j]) {
        ++k[j];
        break;
      }
      k[j] = lo_[j];
      ++j;
    }
    if (j == k.size()) break;
  }
}

void MarketConfig::validate() const {
  if (players < 1) throw std::invalid_argument("MarketConfig: players >= 1 required");
  if (goods < 1) throw std::invalid_argument("MarketConfig: goods >= 1 required");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument("MarketConfig: delta must lie in [0, 1)");
  if (demand_cap < 1) throw std::invalid_argument("MarketConfig: demand cap >= 1 required");
  if (bid_cap < 0.0) throw std::invalid_argument("MarketConfig: bid cap must be nonnegative");
  if (!(value_floor > 0.0 && value_floor <= value_cap))
    throw std::invalid_argument("MarketConfig: need 0 < value floor <= value cap");
  if (supply.goods() != goods)
    throw std::invalid_argument("MarketConfig: supply model has wrong number of goods");
  if (supply.is_fixed()) {
    for (int units : supply.fixed_units())
      if (units < 1) throw std::invalid_argument("MarketConfig: fixed supply must be >= 1");
  }
}

Valuation Valuation::capped_combinatorial(int goods, int cap, Oracle oracle) {
  Valuation v;
  v.kind_ = Kind::CappedCombinatorial;
  v.goods_ = goods;
  v.cap_ = cap;
  v.oracle_ = std::move(oracle);
  return v;
}

Valuation Valuation::single_minded(int goods, int cap, std::vector<int> interest,
                                   std::vector<double> curve) {
  if (interest.empty()) throw std::invalid_argument("Valuation: interest set is empty");
  for (int j : interest)
    if (j < 0 || j >= goods) throw std::invalid_argument("Valuation: interest good out of range");
  if (static_cast<int>(curve.size()) != cap + 1)
    throw std::invalid_argument("Valuation: curve must have cap+1 points");
  if (curve[0] != 0.0) throw std::invalid_argument("Valuation: curve(0) must be 0");
  for (std::size_t l = 1; l < curve.size(); ++l)
    if (curve[l] < curve[l - 1]) throw std::invalid_argument("Valuation: curve must be nondecreasing");
  Valuation v;
  v.kind_ = Kind::SingleMinded;
  v.goods_ = goods;
  v.cap_ = cap;
  v.interest_ = std::move(interest);
  v.curve_ = std::move(curve);
  return v;
}

Valuation Valuation::unit_demand(std::vector<double> per_good_value) {
  Valuation v;
  v.kind_ = Kind::UnitDemand;
  v.goods_ = static_cast<int>(per_good_value.size());
  v.cap_ = 1;
  v.curve_ = std::move(per_good_value);
  return v;
}

double Valuation::eval(std::span<const int> bundle) const {
  if (static_cast<int>(bundle.size()) != goods_)
    throw std::invalid_argument("Valuation::eval: bundle has wrong dimension");
  switch (kind_) {
    case Kind::CappedCombinatorial: {
      std::vector<int> clamped(goods_);
      for (int j = 0; j < goods_; ++j) clamped[j] = std::clamp(bundle[j], 0, cap_);
      return oracle_(clamped);
    }
    case Kind::SingleMinded: {
      int copies = cap_;
      for (int j : interest_) copies = std::min(copies, std::max(bundle[j], 0));
      return curve_[copies];
    }
    case Kind::UnitDemand: {
      double best = 0.0;
      for (int j = 0; j < goods_; ++j)
        if (bundle[j] > 0) best = std::max(best, curve_[j]);
      return best;
    }
  }
  return 0.0;
}

double Valuation::full_bundle_value() const {
  std::vector<int> full(goods_, cap_);
  return eval(full);
}

double eval_valuation(const Valuation& v, std::span<const int> bundle) { return v.eval(bundle); }

std::vector<std::string> validate_valuation(const Valuation& v, const MarketConfig& cfg,
                                            RngStream& rng, int probes) {
  std::vector<std::string> issues;
  std::vector<int> zero(v.goods(), 0);
  if (v.eval(zero) != 0.0) issues.push_back("zero bundle has nonzero value");
  for (int p = 0; p < probes; ++p) {
    std::vector<int> x(v.goods());
    bool nonzero = false;
    for (int j = 0; j < v.goods(); ++j) {
      x[j] = static_cast<int>(rng.uniform_int(0, 2L * cfg.demand_cap));
      nonzero = nonzero || x[j] > 0;
    }
    const double val = v.eval(x);
    if (val < 0.0 || val > cfg.value_cap) {
      issues.push_back("value outside [0, H]");
      break;
    }
    if (nonzero && val > 0.0 && val < cfg.value_floor) {
      issues.push_back("nonzero bundle valued below the floor rho");
      break;
    }
    std::vector<int> clamped(x);
    for (int& u : clamped) u = std::min(u, cfg.demand_cap);
    if (v.eval(clamped) != val) {
      issues.push_back("clamping changes the value");
      break;
    }
  }
  return issues;
}

UniformBids UniformBids::zeros(int players, int goods, int cap) {
  UniformBids b;
  b.players = players;
  b.goods = goods;
  b.cap = cap;
  b.values.assign(static_cast<std::size_t>(players) * goods * cap, 0.0);
  return b;
}

int GreedyBids::max_set_size() const {
  int d = 0;
  for (const auto& bid : bids) d = std::max(d, static_cast<int>(bid.interest.size()));
  return d;
}

int GreedyBids::total_marginals() const {
  int total = 0;
  for (const auto& bid : bids) total += static_cast<int>(bid.marginals.size());
  return total;
}

std::vector<BidViolation> validate_bid_profile(const UniformBids& b, const MarketConfig& cfg) {
  std::vector<BidViolation> out;
  for (int i = 0; i < b.players; ++i) {
    for (int j = 0; j < b.goods; ++j) {
      for (int x = 0; x < b.cap; ++x) {
        const double v = b.at(i, j, x);
        if (v < 0.0 || v > cfg.bid_cap)
          out.push_back({BidViolation::Kind::Range, i, j, x});
        if (x > 0 && v > b.at(i, j, x - 1))
          out.push_back({BidViolation::Kind::Monotonicity, i, j, x});
      }
    }
  }
  return out;
}

std::vector<BidViolation> validate_bid_profile(const GreedyBids& b, const MarketConfig& cfg) {
  std::vector<BidViolation> out;
  for (int i = 0; i < b.players(); ++i) {
    const auto& bid = b.bids[i];
    if (bid.interest.empty()) out.push_back({BidViolation::Kind::EmptyInterest, i, -1, -1});
    for (int j : bid.interest)
      if (j < 0 || j >= b.goods) out.push_back({BidViolation::Kind::BadGood, i, j, -1});
    for (std::size_t x = 0; x < bid.marginals.size(); ++x) {
      const double v = bid.marginals[x];
      if (v < 0.0 || v > cfg.bid_cap)
        out.push_back({BidViolation::Kind::Range, i, -1, static_cast<int>(x)});
      if (x > 0 && v > bid.marginals[x - 1])
        out.push_back({BidViolation::Kind::Monotonicity, i, -1, static_cast<int>(x)});
    }
  }
  return out;
}

ArrivalVector sample_arrival(double delta, int players, RngStream& rng) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument("sample_arrival: delta must lie in [0, 1)");
  ArrivalVector z(players);
  for (int i = 0; i < players; ++i) z[i] = rng.bernoulli(1.0 - delta) ? 1 : 0;
  return z;
}

std::vector<int> sample_supply(const SupplyModel& model, RngStream& rng) {
  return model.sample(rng);
}

}  // namespace poa
