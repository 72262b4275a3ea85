#include "poa/approx_utility.hpp"

#include <algorithm>
#include <cmath>

namespace poa {

namespace {

// (k_j+1)-th highest marginal on good j among all players except `player`.
double others_threshold(const UniformBids& bids, int player, int good, int units) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(bids.players - 1) * bids.cap);
  for (int i = 0; i < bids.players; ++i) {
    if (i == player) continue;
    for (int x = 0; x < bids.cap; ++x) vals.push_back(bids.at(i, good, x));
  }
  if (static_cast<int>(vals.size()) <= units) return 0.0;
  std::nth_element(vals.begin(), vals.begin() + units, vals.end(), std::greater<>());
  return vals[units];
}

struct TieContext {
  int own_strict = 0;
  int own_tied = 0;
  int remaining = 0;               // units left for the tied set
  std::vector<int> other_tied;     // tied-bid counts of the other tied players
  std::vector<int> other_players;  // their ids, aligned with other_tied
};

TieContext delusional_tie_context(const UniformBids& bids, int player, int good, int units,
                                  double threshold) {
  TieContext ctx;
  int strict_all = 0;
  for (int i = 0; i < bids.players; ++i) {
    int strict = 0, tied = 0;
    for (int x = 0; x < bids.cap; ++x) {
      const double v = bids.at(i, good, x);
      if (v > threshold) ++strict;
      else if (v == threshold) ++tied;
    }
    strict_all += strict;
    if (i == player) {
      ctx.own_strict = strict;
      ctx.own_tied = tied;
    } else if (tied > 0) {
      ctx.other_tied.push_back(tied);
      ctx.other_players.push_back(i);
    }
  }
  ctx.remaining = std::max(0, units - strict_all);
  return ctx;
}

int delusional_units_with_order(const TieContext& ctx, int player, const TieBreakOrder& order) {
  int units = ctx.own_strict;
  int remaining = ctx.remaining;
  if (ctx.own_tied == 0 || remaining <= 0) return units;
  for (int pos = 0; pos < static_cast<int>(order.size()) && remaining > 0; ++pos) {
    const int who = order[pos];
    if (who == player) {
      units += std::min(ctx.own_tied, remaining);
      break;
    }
    const auto it = std::find(ctx.other_players.begin(), ctx.other_players.end(), who);
    if (it != ctx.other_players.end())
      remaining -= std::min(ctx.other_tied[it - ctx.other_players.begin()], remaining);
  }
  return units;
}

}  // namespace

ApproxUtilityResult uniform_approx_utility(const UniformBids& bids, const Valuation& v,
                                           int player, std::span<const int> supply,
                                           const std::vector<TieBreakOrder>& orders) {
  ApproxUtilityResult res;
  res.imagined_alloc.assign(bids.goods, 0);
  res.imagined_prices.assign(bids.goods, 0.0);
  double payment = 0.0;
  for (int j = 0; j < bids.goods; ++j) {
    const double theta = others_threshold(bids, player, j, supply[j]);
    const TieContext ctx = delusional_tie_context(bids, player, j, supply[j], theta);
    const int units = delusional_units_with_order(ctx, player, orders[j]);
    res.imagined_prices[j] = theta;
    res.imagined_alloc[j] = units;
    payment += units * theta;
  }
  res.value = v.eval(res.imagined_alloc) - payment;
  return res;
}

ApproxUtilityResult uniform_approx_utility(const UniformBids& bids, const Valuation& v,
                                           int player, std::span<const int> supply,
                                           RngStream& rng) {
  std::vector<TieBreakOrder> orders(bids.goods);
  for (int j = 0; j < bids.goods; ++j) orders[j] = rng.permutation(bids.players);
  return uniform_approx_utility(bids, v, player, supply, orders);
}

double exact_approx_utility_uniform(const UniformBids& bids, std::span<const int> supply,
                                    const Valuation& v, int player, long joint_cap) {
  double payment = 0.0;
  std::vector<std::vector<std::pair<int, double>>> dists(bids.goods);
  for (int j = 0; j < bids.goods; ++j) {
    const double theta = others_threshold(bids, player, j, supply[j]);
    const TieContext ctx = delusional_tie_context(bids, player, j, supply[j], theta);
    auto tie_dist = tie_win_distribution(ctx.own_tied, ctx.other_tied, ctx.remaining);
    auto& dist = dists[j];
    for (auto [u, p] : tie_dist) dist.push_back({ctx.own_strict + u, p});
    double mean_units = 0.0;
    for (auto [u, p] : dist) mean_units += u * p;
    payment += mean_units * theta;
  }
  std::vector<std::pair<std::vector<int>, double>> joint{{std::vector<int>{}, 1.0}};
  for (int j = 0; j < bids.goods; ++j) {
    std::vector<std::pair<std::vector<int>, double>> next;
    next.reserve(joint.size() * dists[j].size());
    for (const auto& [prefix, p] : joint) {
      for (const auto& [u, q] : dists[j]) {
        auto ext = prefix;
        ext.push_back(u);
        next.push_back({std::move(ext), p * q});
      }
    }
    if (static_cast<long>(next.size()) > joint_cap)
      throw CapacityError("exact_approx_utility_uniform: joint tie support too large");
    joint = std::move(next);
  }
  double value = 0.0;
  for (const auto& [bundle, p] : joint) value += p * v.eval(bundle);
  return value - payment;
}

ApproxUtilityResult greedy_approx_utility(const GreedyBids& bids, const Valuation& v, int player,
                                          std::span<const int> supply,
                                          const TiePriority& priority) {
  const double theta = critical_price_excluding(player, player, bids, supply, priority);
  int copies = 0;
  for (double m : bids.bids[player].marginals)
    if (m > theta) ++copies;
  std::vector<int> bundle(bids.goods, 0);
  for (int j : bids.bids[player].interest) bundle[j] = copies;
  ApproxUtilityResult res;
  res.imagined_alloc = {copies};
  res.imagined_prices = {theta};
  res.value = v.eval(bundle) - copies * theta;
  return res;
}

namespace {

template <typename PerArrival>
Estimate exact_over_arrivals(int players, int player, double delta, PerArrival&& fn) {
  if (players > 20) throw CapacityError("exact arrival enumeration needs players <= 20");
  const int others = players - 1;
  std::vector<int> kept;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << others); ++mask) {
    kept.clear();
    double weight = 1.0 - delta;
    int o = 0;
    for (int i = 0; i < players; ++i) {
      if (i == player) {
        kept.push_back(i);
        continue;
      }
      if (mask >> o & 1) {
        kept.push_back(i);
        weight *= 1.0 - delta;
      } else {
        weight *= delta;
      }
      ++o;
    }
    if (weight == 0.0) continue;
    total += weight * fn(kept);
  }
  return {total, 0.0};
}

int index_within(std::span<const int> kept, int player) {
  return static_cast<int>(std::find(kept.begin(), kept.end(), player) - kept.begin());
}

}  // namespace

Estimate noisy_approx_utility(const UniformBids& bids, const Valuation& v, int player,
                              const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                              long trials, RngStream& rng) {
  if (mode == EvalMode::Exact) {
    return exact_over_arrivals(bids.players, player, cfg.delta, [&](std::span<const int> kept) {
      const UniformBids sub = restrict_bids(bids, kept);
      return exact_approx_utility_uniform(sub, supply, v, index_within(kept, player));
    });
  }
  RunningStat stat;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    kept.clear();
    for (int i = 0; i < bids.players; ++i)
      if (i == player || trial.bernoulli(1.0 - cfg.delta)) kept.push_back(i);
    const UniformBids sub = restrict_bids(bids, kept);
    stat.add(uniform_approx_utility(sub, v, index_within(kept, player), supply, trial).value);
  }
  return {(1.0 - cfg.delta) * stat.mean(), (1.0 - cfg.delta) * stat.stderror()};
}

Estimate noisy_approx_utility(const GreedyBids& bids, const Valuation& v, int player,
                              const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                              long trials, RngStream& rng) {
  if (mode == EvalMode::Exact) {
    const TiePriority priority = draw_tie_priority(bids, rng);
    return exact_over_arrivals(bids.players(), player, cfg.delta, [&](std::span<const int> kept) {
      const GreedyBids sub = restrict_bids(bids, kept);
      const TiePriority sub_priority = restrict_priority(priority, bids, kept);
      return greedy_approx_utility(sub, v, index_within(kept, player), supply, sub_priority)
          .value;
    });
  }
  RunningStat stat;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    const TiePriority priority = draw_tie_priority(bids, trial);
    kept.clear();
    for (int i = 0; i < bids.players(); ++i)
      if (i == player || trial.bernoulli(1.0 - cfg.delta)) kept.push_back(i);
    const GreedyBids sub = restrict_bids(bids, kept);
    const TiePriority sub_priority = restrict_priority(priority, bids, kept);
    stat.add(greedy_approx_utility(sub, v, index_within(kept, player), supply, sub_priority).value);
  }
  return {(1.0 - cfg.delta) * stat.mean(), (1.0 - cfg.delta) * stat.stderror()};
}

Estimate noisy_expected_utility(const GreedyBids& bids, const Valuation& v, int player,
                                const MarketConfig& cfg, std::span<const int> supply,
                                EvalMode mode, long trials, RngStream& rng) {
  if (mode == EvalMode::Exact) {
    const TiePriority priority = draw_tie_priority(bids, rng);
    return exact_over_arrivals(bids.players(), player, cfg.delta, [&](std::span<const int> kept) {
      const GreedyBids sub = restrict_bids(bids, kept);
      const TiePriority sub_priority = restrict_priority(priority, bids, kept);
      const GreedyOutcome out = run_greedy(sub, supply, sub_priority);
      return greedy_utility(sub, out, v, index_within(kept, player));
    });
  }
  RunningStat stat;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    const TiePriority priority = draw_tie_priority(bids, trial);
    kept.clear();
    for (int i = 0; i < bids.players(); ++i)
      if (i == player || trial.bernoulli(1.0 - cfg.delta)) kept.push_back(i);
    const GreedyBids sub = restrict_bids(bids, kept);
    const TiePriority sub_priority = restrict_priority(priority, bids, kept);
    const GreedyOutcome out = run_greedy(sub, supply, sub_priority);
    stat.add(greedy_utility(sub, out, v, index_within(kept, player)));
  }
  return {(1.0 - cfg.delta) * stat.mean(), (1.0 - cfg.delta) * stat.stderror()};
}

namespace {

// Single-good, single-marginal gap sampler. Conditional on the arrival
// draw, both utilities are linear in the player's unit count (r = 1), so
// tie-breaks are averaged out in closed form; the estimate stays unbiased
// with lower variance. Each tied player holds exactly one tied bid here.
Estimate gap_uniform_fast(const UniformBids& bids, const Valuation& v, int player,
                          const MarketConfig& cfg, int units, long trials, RngStream& rng) {
  std::vector<std::pair<double, int>> levels;  // others' bid levels, desc
  for (int i = 0; i < bids.players; ++i) {
    if (i == player) continue;
    const double b = bids.at(i, 0, 0);
    auto it = std::find_if(levels.begin(), levels.end(),
                           [&](const auto& lv) { return lv.first == b; });
    if (it == levels.end()) levels.push_back({b, 1});
    else ++it->second;
  }
  std::sort(levels.begin(), levels.end(), std::greater<>());
  const double own = bids.at(player, 0, 0);
  const std::vector<int> one{1};
  const double val1 = v.eval(one);

  // Walks a descending (value, count) list; fills theta (the (units+1)-th
  // highest, 0 if short), the count strictly above it, and the tied count.
  struct Cut {
    double theta = 0.0;
    long above = 0;
    long tied = 0;
    bool short_list = false;  // fewer than units+1 bids
  };
  auto cut_at = [](const std::vector<std::pair<double, long>>& lv, long units_) {
    Cut c;
    long cum = 0;
    for (const auto& [value, count] : lv) {
      if (cum + count >= units_ + 1) {
        c.theta = value;
        c.above = cum;
        c.tied = count;
        return c;
      }
      cum += count;
    }
    c.above = cum;
    c.short_list = true;
    return c;
  };

  RunningStat diff;
  std::vector<long> arrived(levels.size());
  std::vector<std::pair<double, long>> merged;
  std::vector<std::pair<double, long>> others_only;
  const double keep = 1.0 - cfg.delta;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    long total_others = 0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      long c = 0;
      for (int s = 0; s < levels[l].second; ++s) c += trial.bernoulli(keep) ? 1 : 0;
      arrived[l] = c;
      total_others += c;
    }
    others_only.clear();
    for (std::size_t l = 0; l < levels.size(); ++l)
      if (arrived[l] > 0) others_only.push_back({levels[l].first, arrived[l]});

    merged.clear();
    bool inserted = false;
    for (const auto& [value, count] : others_only) {
      if (!inserted && own > value) {
        merged.push_back({own, 1});
        inserted = true;
      }
      if (!inserted && own == value) {
        merged.push_back({value, count + 1});
        inserted = true;
      } else {
        merged.push_back({value, count});
      }
    }
    if (!inserted) merged.push_back({own, 1});

    double u;
    if (total_others + 1 <= units) {
      u = val1;
    } else {
      const Cut c = cut_at(merged, units);
      if (own > c.theta) u = val1 - c.theta;
      else if (own == c.theta && !c.short_list)
        u = static_cast<double>(units - c.above) / static_cast<double>(c.tied) *
            (val1 - c.theta);
      else u = 0.0;
    }

    double U;
    {
      const Cut c = cut_at(others_only, units);
      const double theta = c.short_list ? 0.0 : c.theta;
      if (own > theta) {
        U = val1 - theta;
      } else if (own == theta) {
        long tied_others = 0;
        if (!c.short_list) {
          tied_others = c.tied;
        } else {
          for (const auto& [value, count] : others_only)
            if (value == theta) tied_others = count;
        }
        long strictly_above = 0;
        for (const auto& [value, count] : others_only)
          if (value > theta) strictly_above += count;
        const long left = std::max(0L, units - strictly_above);
        U = std::min(1.0, static_cast<double>(left) / static_cast<double>(tied_others + 1)) *
            (val1 - theta);
      } else {
        U = 0.0;
      }
    }
    diff.add(u - U);
  }
  return {std::abs(keep * diff.mean()), keep * diff.stderror()};
}

}  // namespace

Estimate utility_gap_uniform(const UniformBids& bids, const Valuation& v, int player,
                             const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                             long trials, RngStream& rng) {
  if (mode == EvalMode::Exact) {
    const Estimate est =
        exact_over_arrivals(bids.players, player, cfg.delta, [&](std::span<const int> kept) {
          const UniformBids sub = restrict_bids(bids, kept);
          const int idx = index_within(kept, player);
          return exact_utility_uniform(sub, supply, v, idx) -
                 exact_approx_utility_uniform(sub, supply, v, idx);
        });
    return {std::abs(est.value), 0.0};
  }
  if (bids.goods == 1 && bids.cap == 1)
    return gap_uniform_fast(bids, v, player, cfg, supply[0], trials, rng);

  RunningStat diff;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    kept.clear();
    for (int i = 0; i < bids.players; ++i)
      if (i == player || trial.bernoulli(1.0 - cfg.delta)) kept.push_back(i);
    const UniformBids sub = restrict_bids(bids, kept);
    const int idx = index_within(kept, player);
    std::vector<TieBreakOrder> orders(sub.goods);
    for (int j = 0; j < sub.goods; ++j) orders[j] = trial.permutation(sub.players);
    UniformOutcome out = run_simultaneous(sub, supply, orders);
    const double u = utility(out, v, idx);
    const double U = uniform_approx_utility(sub, v, idx, supply, orders).value;
    diff.add(u - U);
  }
  const double keep = 1.0 - cfg.delta;
  return {std::abs(keep * diff.mean()), keep * diff.stderror()};
}

Estimate utility_gap_greedy(const GreedyBids& bids, const Valuation& v, int player,
                            const MarketConfig& cfg, std::span<const int> supply, EvalMode mode,
                            long trials, RngStream& rng) {
  if (mode == EvalMode::Exact) {
    const TiePriority priority = draw_tie_priority(bids, rng);
    const Estimate est =
        exact_over_arrivals(bids.players(), player, cfg.delta, [&](std::span<const int> kept) {
          const GreedyBids sub = restrict_bids(bids, kept);
          const TiePriority sub_priority = restrict_priority(priority, bids, kept);
          const int idx = index_within(kept, player);
          const GreedyOutcome out = run_greedy(sub, supply, sub_priority);
          return greedy_utility(sub, out, v, idx) -
                 greedy_approx_utility(sub, v, idx, supply, sub_priority).value;
        });
    return {std::abs(est.value), 0.0};
  }
  RunningStat diff;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    const TiePriority priority = draw_tie_priority(bids, trial);
    kept.clear();
    for (int i = 0; i < bids.players(); ++i)
      if (i == player || trial.bernoulli(1.0 - cfg.delta)) kept.push_back(i);
    const GreedyBids sub = restrict_bids(bids, kept);
    const TiePriority sub_priority = restrict_priority(priority, bids, kept);
    const int idx = index_within(kept, player);
    const GreedyOutcome out = run_greedy(sub, supply, sub_priority);
    diff.add(greedy_utility(sub, out, v, idx) -
             greedy_approx_utility(sub, v, idx, supply, sub_priority).value);
  }
  const double keep = 1.0 - cfg.delta;
  return {std::abs(keep * diff.mean()), keep * diff.stderror()};
}

}  // namespace poa
