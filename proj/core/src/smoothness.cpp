#include "poa/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poa {

long required_supply_r1(const RateInputs& in) {
  if (!(in.epsilon > 0.0) || !(in.delta > 0.0 && in.delta < 1.0))
    throw std::invalid_argument("required_supply_r1: need epsilon > 0 and delta in (0, 1)");
  const double bh = in.bid_cap + in.value_cap;
  const double rho = in.value_floor;
  const double m = static_cast<double>(in.goods);
  const double raw = 36.0 * rho * rho * m * m * bh * bh /
                     (in.epsilon * in.epsilon * in.delta * (1.0 - in.delta));
  return static_cast<long>(std::ceil(raw - 1e-9));
}

long required_supply_general(const RateInputs& in) {
  if (!(in.epsilon > 0.0) || !(in.delta > 0.0 && in.delta < 1.0))
    throw std::invalid_argument("required_supply_general: need epsilon > 0 and delta in (0, 1)");
  const double bh = in.bid_cap + in.value_cap;
  const double rho = in.value_floor;
  const double m = static_cast<double>(in.goods);
  const double r = static_cast<double>(in.demand_cap);
  const double raw = 16.0 * m * m * bh * bh * std::pow(r, 8) * rho * rho /
                         (in.epsilon * in.epsilon * in.delta * (1.0 - in.delta)) +
                     r;
  return static_cast<long>(std::ceil(raw - 1e-9));
}

double binomial_pmf_bound(long t, double p) {
  if (t < 1) throw std::invalid_argument("binomial_pmf_bound: t >= 1 required");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("binomial_pmf_bound: p in (0,1) required");
  return 2.0 / std::sqrt(static_cast<double>(t) * p * (1.0 - p));
}

UniformBids uniform_deviation(std::span<const Valuation> valuations, const OptResult& opt,
                              const MarketConfig& cfg) {
  const int n = static_cast<int>(valuations.size());
  UniformBids dev = UniformBids::zeros(n, cfg.goods, cfg.demand_cap);
  for (int i = 0; i < n; ++i) {
    const auto bundle = opt.bundle(i, cfg.goods);
    const double bid = valuations[i].eval(bundle);
    if (bid > cfg.bid_cap)
      throw BidCapError("uniform_deviation: optimal-bundle value exceeds the bid cap");
    for (int j = 0; j < cfg.goods; ++j)
      for (int x = 0; x < std::min(bundle[j], cfg.demand_cap); ++x) dev.at(i, j, x) = bid;
  }
  return dev;
}

namespace {

// Least concave majorant of curve points (l, curve[l]); returns its
// non-increasing marginal differences.
std::vector<double> concave_marginals(const std::vector<double>& curve, bool* changed) {
  const int r = static_cast<int>(curve.size()) - 1;
  std::vector<int> hull;  // indices of upper-hull vertices
  for (int l = 0; l <= r; ++l) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull[hull.size() - 1];
      const double cross = (curve[b] - curve[a]) * (l - b) - (curve[l] - curve[b]) * (b - a);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(l);
  }
  std::vector<double> hull_curve(curve.size());
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const int a = hull[h], b = hull[h + 1];
    for (int l = a; l <= b; ++l)
      hull_curve[l] = curve[a] + (curve[b] - curve[a]) * (l - a) / (b - a);
  }
  hull_curve[r] = curve[hull.back()];
  if (changed) {
    for (int l = 0; l <= r; ++l)
      if (std::abs(hull_curve[l] - curve[l]) > 1e-12) {
        *changed = true;
        break;
      }
  }
  std::vector<double> marginals(r);
  for (int l = 1; l <= r; ++l) marginals[l - 1] = hull_curve[l] - hull_curve[l - 1];
  for (int l = 1; l < r; ++l) marginals[l] = std::min(marginals[l], marginals[l - 1]);
  return marginals;
}

}  // namespace

GreedyBids greedy_truthful_deviation(std::span<const Valuation> valuations, int cap,
                                     bool* concavified) {
  if (concavified) *concavified = false;
  GreedyBids dev;
  dev.goods = valuations.empty() ? 0 : valuations[0].goods();
  for (const Valuation& v : valuations) {
    if (v.kind() != Valuation::Kind::SingleMinded)
      throw std::invalid_argument("greedy_truthful_deviation: single-minded valuations required");
    bool changed = false;
    GreedyBid bid;
    bid.interest = v.interest();
    bid.marginals = concave_marginals(v.curve(), &changed);
    bid.marginals.resize(cap, 0.0);
    if (changed && concavified) *concavified = true;
    dev.bids.push_back(std::move(bid));
  }
  return dev;
}

RandomProxyDeviation::RandomProxyDeviation(std::vector<Valuation> valuations, MarketConfig cfg,
                                           std::vector<int> supply, long node_budget)
    : valuations_(std::move(valuations)),
      cfg_(std::move(cfg)),
      supply_(std::move(supply)),
      node_budget_(node_budget) {}

std::vector<double> RandomProxyDeviation::sample_bids(int player, RngStream& rng) const {
  const int n = static_cast<int>(valuations_.size());
  std::vector<int> kept;
  kept.push_back(player);
  for (int i = 0; i < n; ++i)
    if (i != player && rng.bernoulli(1.0 - cfg_.delta)) kept.push_back(i);
  std::sort(kept.begin(), kept.end());

  std::vector<Valuation> sub;
  sub.reserve(kept.size());
  for (int i : kept) sub.push_back(valuations_[i]);
  const OptResult opt = opt_exhaustive(sub, supply_, cfg_.demand_cap, node_budget_);

  const int idx = static_cast<int>(std::find(kept.begin(), kept.end(), player) - kept.begin());
  const auto bundle = opt.bundle(idx, cfg_.goods);
  const double bid = valuations_[player].eval(bundle);
  if (bid > cfg_.bid_cap)
    throw BidCapError("RandomProxyDeviation: optimal-bundle value exceeds the bid cap");
  std::vector<double> row(static_cast<std::size_t>(cfg_.goods) * cfg_.demand_cap, 0.0);
  for (int j = 0; j < cfg_.goods; ++j)
    for (int x = 0; x < std::min(bundle[j], cfg_.demand_cap); ++x)
      row[static_cast<std::size_t>(j) * cfg_.demand_cap + x] = bid;
  return row;
}

namespace {

// Non-increasing level tuples of a given length over {0, .., levels-1}.
class MonotoneTupleEnumerator {
 public:
  MonotoneTupleEnumerator(int length, int levels) {
    std::vector<int> cur(length, 0);
    while (true) {
      tuples_.push_back(cur);
      int pos = length - 1;
      while (pos >= 0) {
        const int limit = pos == 0 ? levels - 1 : cur[pos - 1];
        if (cur[pos] < limit) {
          ++cur[pos];
          for (int q = pos + 1; q < length; ++q) cur[q] = 0;
          break;
        }
        --pos;
      }
      if (pos < 0) break;
    }
  }
  const std::vector<std::vector<int>>& tuples() const { return tuples_; }

 private:
  std::vector<std::vector<int>> tuples_;
};

template <typename EvalProfile>
void enumerate_uniform_profiles(int players, int goods, int cap, int levels, double step,
                                EvalProfile&& eval) {
  MonotoneTupleEnumerator tuples(cap, levels);
  const auto& options = tuples.tuples();
  const int slots = players * goods;
  std::vector<std::size_t> pick(slots, 0);
  UniformBids profile = UniformBids::zeros(players, goods, cap);
  while (true) {
    for (int s = 0; s < slots; ++s) {
      const auto& tup = options[pick[s]];
      const int i = s / goods, j = s % goods;
      for (int x = 0; x < cap; ++x) profile.at(i, j, x) = tup[x] * step;
    }
    eval(profile);
    int s = slots - 1;
    while (s >= 0) {
      if (++pick[s] < options.size()) break;
      pick[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
}

UniformBids random_uniform_profile(int players, int goods, int cap, int levels, double step,
                                   RngStream& rng) {
  UniformBids b = UniformBids::zeros(players, goods, cap);
  for (int i = 0; i < players; ++i) {
    for (int j = 0; j < goods; ++j) {
      int prev = levels - 1;
      for (int x = 0; x < cap; ++x) {
        const int lvl = static_cast<int>(rng.uniform_int(0, prev));
        b.at(i, j, x) = lvl * step;
        prev = lvl;
      }
    }
  }
  return b;
}

}  // namespace

SmoothnessReport check_smoothness_uniform(UtilityKind kind, double lambda, double mu,
                                          std::span<const Valuation> valuations,
                                          const MarketConfig& cfg, std::span<const int> supply,
                                          const UniformBids& deviation,
                                          const GridProfileSource* grid,
                                          const RandomProfileSource* random, RngStream& rng) {
  const int n = static_cast<int>(valuations.size());
  const OptResult opt = opt_exhaustive(valuations, supply, cfg.demand_cap);

  SmoothnessReport report;
  report.lambda = lambda;
  report.mu = mu;
  report.opt_value = opt.value;
  report.min_slack = std::numeric_limits<double>::infinity();

  std::vector<TieBreakOrder> orders(cfg.goods);
  UniformBids swapped;
  long profile_counter = 0;
  auto eval_profile = [&](const UniformBids& b) {
    RngStream profile_rng = rng.substream(static_cast<std::uint64_t>(profile_counter));
    for (int j = 0; j < cfg.goods; ++j) orders[j] = profile_rng.permutation(n);

    const UniformOutcome base = run_simultaneous(b, supply, orders);
    double deviation_sum = 0.0;
    swapped = b;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.goods; ++j)
        for (int x = 0; x < cfg.demand_cap; ++x) swapped.at(i, j, x) = deviation.at(i, j, x);
      if (kind == UtilityKind::Approximate) {
        deviation_sum += uniform_approx_utility(swapped, valuations[i], i, supply, orders).value;
      } else {
        const UniformOutcome out = run_simultaneous(swapped, supply, orders);
        deviation_sum += utility(out, valuations[i], i);
      }
      for (int j = 0; j < cfg.goods; ++j)
        for (int x = 0; x < cfg.demand_cap; ++x) swapped.at(i, j, x) = b.at(i, j, x);
    }
    const double slack = deviation_sum - lambda * opt.value + mu * base.revenue;
    if (slack < report.min_slack) {
      report.min_slack = slack;
      report.worst_uniform = b;
    }
    ++profile_counter;
    ++report.profiles_tested;
  };

  if (grid) {
    const int levels = static_cast<int>(std::floor(cfg.bid_cap / grid->step + 1e-9)) + 1;
    enumerate_uniform_profiles(n, cfg.goods, cfg.demand_cap, levels, grid->step, eval_profile);
  }
  if (random) {
    const int levels = 256;
    const double step = cfg.bid_cap / (levels - 1);
    RngStream gen = rng.substream(0x70f11e5ULL);
    for (long c = 0; c < random->count; ++c)
      eval_profile(random_uniform_profile(n, cfg.goods, cfg.demand_cap, levels, step, gen));
  }
  report.epsilon_hat =
      opt.value > 0.0 ? std::max(0.0, -report.min_slack) / (lambda * opt.value) : 0.0;
  return report;
}

SmoothnessReport check_smoothness_greedy(UtilityKind kind, double lambda, double mu,
                                         std::span<const Valuation> valuations,
                                         const MarketConfig& cfg, std::span<const int> supply,
                                         const GreedyBids& deviation,
                                         std::span<const std::vector<int>> declared_sets,
                                         const GridProfileSource* grid,
                                         const RandomProfileSource* random, RngStream& rng) {
  const int n = static_cast<int>(valuations.size());
  const OptResult opt = opt_single_minded(valuations, supply);

  SmoothnessReport report;
  report.lambda = lambda;
  report.mu = mu;
  report.opt_value = opt.value;
  report.min_slack = std::numeric_limits<double>::infinity();

  GreedyBids profile;
  profile.goods = cfg.goods;
  profile.bids.resize(n);
  for (int i = 0; i < n; ++i) {
    profile.bids[i].interest = declared_sets[i];
    profile.bids[i].marginals.assign(cfg.demand_cap, 0.0);
  }

  long profile_counter = 0;
  GreedyBids swapped;
  auto eval_profile = [&](const GreedyBids& b) {
    RngStream profile_rng = rng.substream(static_cast<std::uint64_t>(profile_counter));
    const TiePriority priority = draw_tie_priority(b, profile_rng);

    const GreedyOutcome base = run_greedy(b, supply, priority);
    double deviation_sum = 0.0;
    swapped = b;
    for (int i = 0; i < n; ++i) {
      swapped.bids[i] = deviation.bids[i];
      // Priorities are per-slot; deviations keep the same marginal count.
      if (kind == UtilityKind::Approximate) {
        deviation_sum += greedy_approx_utility(swapped, valuations[i], i, supply, priority).value;
      } else {
        const GreedyOutcome out = run_greedy(swapped, supply, priority);
        deviation_sum += greedy_utility(swapped, out, valuations[i], i);
      }
      swapped.bids[i] = b.bids[i];
    }
    const double slack = deviation_sum - lambda * opt.value + mu * base.revenue;
    if (slack < report.min_slack) {
      report.min_slack = slack;
      report.worst_greedy = b;
    }
    ++profile_counter;
    ++report.profiles_tested;
  };

  auto set_marginals = [&](GreedyBids& b, int player, const std::vector<int>& tuple,
                           double step) {
    for (int x = 0; x < cfg.demand_cap; ++x) b.bids[player].marginals[x] = tuple[x] * step;
  };

  if (grid) {
    const int levels = static_cast<int>(std::floor(cfg.bid_cap / grid->step + 1e-9)) + 1;
    MonotoneTupleEnumerator tuples(cfg.demand_cap, levels);
    const auto& options = tuples.tuples();
    std::vector<std::size_t> pick(n, 0);
    while (true) {
      for (int i = 0; i < n; ++i) set_marginals(profile, i, options[pick[i]], grid->step);
      eval_profile(profile);
      int s = n - 1;
      while (s >= 0) {
        if (++pick[s] < options.size()) break;
        pick[s] = 0;
        --s;
      }
      if (s < 0) break;
    }
  }
  if (random) {
    const int levels = 256;
    const double step = cfg.bid_cap / (levels - 1);
    RngStream gen = rng.substream(0x70f11e5ULL);
    for (long c = 0; c < random->count; ++c) {
      for (int i = 0; i < n; ++i) {
        int prev = levels - 1;
        for (int x = 0; x < cfg.demand_cap; ++x) {
          const int lvl = static_cast<int>(gen.uniform_int(0, prev));
          profile.bids[i].marginals[x] = lvl * step;
          prev = lvl;
        }
      }
      eval_profile(profile);
    }
  }
  report.epsilon_hat =
      opt.value > 0.0 ? std::max(0.0, -report.min_slack) / (lambda * opt.value) : 0.0;
  return report;
}

TailEstimate tail_estimator(const UniformBids& bids, double x, const MarketConfig& cfg,
                            long trials, RngStream& rng) {
  if (trials < 10000)
    throw std::invalid_argument("tail_estimator: at least 10^4 trials required");
  std::vector<int> above_per_player(bids.players, 0);
  int max_q = 0;
  for (int i = 0; i < bids.players; ++i) {
    int c = 0;
    for (int j = 0; j < bids.goods; ++j)
      for (int m = 0; m < bids.cap; ++m)
        if (bids.at(i, j, m) > x) ++c;
    above_per_player[i] = c;
    max_q += c;
  }
  std::vector<long> hist(max_q + 1, 0);
  const double keep = 1.0 - cfg.delta;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    int q = 0;
    for (int i = 0; i < bids.players; ++i)
      if (above_per_player[i] > 0 && trial.bernoulli(keep)) q += above_per_player[i];
    ++hist[q];
  }
  TailEstimate est;
  est.trials = trials;
  est.pmf.resize(max_q + 1);
  est.se.resize(max_q + 1);
  for (int q = 0; q <= max_q; ++q) {
    const double p = static_cast<double>(hist[q]) / static_cast<double>(trials);
    est.pmf[q] = p;
    est.se[q] = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
  }
  return est;
}

}  // namespace poa
