#include "poa/uniform_auction.hpp"

#include <algorithm>
#include <cmath>

namespace poa {

namespace {

void check_monotone(std::span<const double> marginals, int players, int cap) {
  for (int i = 0; i < players; ++i)
    for (int x = 1; x < cap; ++x)
      if (marginals[static_cast<std::size_t>(i) * cap + x] >
          marginals[static_cast<std::size_t>(i) * cap + x - 1])
        throw std::invalid_argument("run_single_good: marginal bids must be non-increasing");
}

}  // namespace

SingleGoodResult run_single_good(std::span<const double> marginals, int players, int cap,
                                 int units, const TieBreakOrder& order) {
  if (static_cast<int>(marginals.size()) != players * cap)
    throw std::invalid_argument("run_single_good: bid matrix has wrong shape");
  if (units < 0) throw std::invalid_argument("run_single_good: negative supply");
  check_monotone(marginals, players, cap);

  SingleGoodResult res;
  res.alloc.assign(players, 0);

  const int total_bids = players * cap;
  if (total_bids <= units) {
    for (int i = 0; i < players; ++i) res.alloc[i] = cap;
    res.price = 0.0;
    return res;
  }

  std::vector<double> sorted(marginals.begin(), marginals.end());
  std::nth_element(sorted.begin(), sorted.begin() + units, sorted.end(), std::greater<>());
  const double threshold = sorted[units];  // (units+1)-th highest bid
  res.price = threshold;

  int strict = 0;
  for (int i = 0; i < players; ++i) {
    int wins = 0;
    for (int x = 0; x < cap; ++x)
      if (marginals[static_cast<std::size_t>(i) * cap + x] > threshold) ++wins;
    res.alloc[i] = wins;
    strict += wins;
  }

  int remaining = units - strict;
  for (int pos = 0; pos < players && remaining > 0; ++pos) {
    const int i = order.at(pos);
    int tied = 0;
    for (int x = 0; x < cap; ++x)
      if (marginals[static_cast<std::size_t>(i) * cap + x] == threshold) ++tied;
    const int take = std::min(tied, remaining);
    res.alloc[i] += take;
    remaining -= take;
  }
  return res;
}

UniformOutcome run_simultaneous(const UniformBids& bids, std::span<const int> supply,
                                const std::vector<TieBreakOrder>& orders) {
  if (static_cast<int>(supply.size()) != bids.goods)
    throw std::invalid_argument("run_simultaneous: supply length != goods");
  if (static_cast<int>(orders.size()) != bids.goods)
    throw std::invalid_argument("run_simultaneous: one tie-break order per good required");

  UniformOutcome out;
  out.players = bids.players;
  out.goods = bids.goods;
  out.alloc.assign(static_cast<std::size_t>(bids.players) * bids.goods, 0);
  out.price.assign(bids.goods, 0.0);
  out.payments.assign(bids.players, 0.0);

  std::vector<double> column(static_cast<std::size_t>(bids.players) * bids.cap);
  for (int j = 0; j < bids.goods; ++j) {
    for (int i = 0; i < bids.players; ++i)
      for (int x = 0; x < bids.cap; ++x)
        column[static_cast<std::size_t>(i) * bids.cap + x] = bids.at(i, j, x);
    const SingleGoodResult single = run_single_good(column, bids.players, bids.cap, supply[j],
                                                    orders[j]);
    out.price[j] = single.price;
    for (int i = 0; i < bids.players; ++i)
      out.alloc[static_cast<std::size_t>(i) * bids.goods + j] = single.alloc[i];
  }
  for (int i = 0; i < bids.players; ++i) {
    double pay = 0.0;
    for (int j = 0; j < bids.goods; ++j) pay += out.alloc_at(i, j) * out.price[j];
    out.payments[i] = pay;
    out.revenue += pay;
  }
  return out;
}

UniformOutcome run_simultaneous(const UniformBids& bids, std::span<const int> supply,
                                RngStream& rng) {
  std::vector<TieBreakOrder> orders(bids.goods);
  for (int j = 0; j < bids.goods; ++j) orders[j] = rng.permutation(bids.players);
  return run_simultaneous(bids, supply, orders);
}

double fill_welfare(UniformOutcome& out, std::span<const Valuation> valuations) {
  double total = 0.0;
  for (int i = 0; i < out.players; ++i) total += valuations[i].eval(out.bundle(i));
  out.welfare = total;
  return total;
}

double utility(const UniformOutcome& out, const Valuation& v, int player) {
  return v.eval(out.bundle(player)) - out.payments[player];
}

std::vector<std::pair<int, double>> tie_win_distribution(int own_tied,
                                                         std::span<const int> other_tied,
                                                         int remaining) {
  if (own_tied == 0 || remaining <= 0) return {{0, 1.0}};
  const int t_others = static_cast<int>(other_tied.size());
  if (t_others == 0) return {{std::min(own_tied, remaining), 1.0}};

  const bool all_single = std::all_of(other_tied.begin(), other_tied.end(),
                                      [](int c) { return c == 1; });
  std::vector<double> prob_units(own_tied + 1, 0.0);
  if (all_single) {
    // The number of tied bidders ahead of the player is uniform on 0..t.
    const double w = 1.0 / static_cast<double>(t_others + 1);
    for (int ahead = 0; ahead <= t_others; ++ahead) {
      const int left = std::max(0, remaining - ahead);
      prob_units[std::min(own_tied, left)] += w;
    }
  } else {
    // ways[s][sum] counts size-s subsets of the other tied bidders holding
    // `sum` tied bids in total (sums past `remaining` pooled).
    const int sum_cap = remaining;
    std::vector<std::vector<double>> ways(t_others + 1, std::vector<double>(sum_cap + 2, 0.0));
    ways[0][0] = 1.0;
    for (int c : other_tied) {
      for (int s = t_others - 1; s >= 0; --s) {
        for (int sum = sum_cap + 1; sum >= 0; --sum) {
          if (ways[s][sum] == 0.0) continue;
          const int nsum = std::min(sum + c, sum_cap + 1);
          ways[s + 1][nsum] += ways[s][sum];
        }
      }
    }
    std::vector<double> binom(t_others + 1);
    binom[0] = 1.0;
    for (int s = 1; s <= t_others; ++s)
      binom[s] = binom[s - 1] * static_cast<double>(t_others - s + 1) / static_cast<double>(s);
    const double pos_weight = 1.0 / static_cast<double>(t_others + 1);
    for (int s = 0; s <= t_others; ++s) {
      for (int sum = 0; sum <= sum_cap + 1; ++sum) {
        const double w = ways[s][sum];
        if (w == 0.0) continue;
        const int left = std::max(0, remaining - sum);
        prob_units[std::min(own_tied, left)] += pos_weight * w / binom[s];
      }
    }
  }
  std::vector<std::pair<int, double>> dist;
  for (int u = 0; u <= own_tied; ++u)
    if (prob_units[u] > 0.0) dist.push_back({u, prob_units[u]});
  return dist;
}

std::vector<std::pair<int, double>> exact_alloc_distribution(std::span<const double> marginals,
                                                             int players, int cap, int units,
                                                             int player) {
  check_monotone(marginals, players, cap);
  const int total_bids = players * cap;
  if (total_bids <= units) return {{cap, 1.0}};

  std::vector<double> sorted(marginals.begin(), marginals.end());
  std::nth_element(sorted.begin(), sorted.begin() + units, sorted.end(), std::greater<>());
  const double threshold = sorted[units];

  auto bids_of = [&](int i) {
    return marginals.subspan(static_cast<std::size_t>(i) * cap, cap);
  };
  auto count_eq = [&](int i) {
    int c = 0;
    for (double v : bids_of(i))
      if (v == threshold) ++c;
    return c;
  };

  int strict_total = 0, own_strict = 0;
  for (int i = 0; i < players; ++i)
    for (double v : bids_of(i))
      if (v > threshold) {
        ++strict_total;
        if (i == player) ++own_strict;
      }
  const int remaining = units - strict_total;
  const int own_tied = count_eq(player);
  if (remaining <= 0 || own_tied == 0) return {{own_strict, 1.0}};

  std::vector<int> other_tied;
  for (int i = 0; i < players; ++i)
    if (i != player) {
      const int c = count_eq(i);
      if (c > 0) other_tied.push_back(c);
    }
  std::vector<std::pair<int, double>> dist =
      tie_win_distribution(own_tied, other_tied, remaining);
  for (auto& [u, p] : dist) u += own_strict;
  return dist;
}

double exact_utility_uniform(const UniformBids& bids, std::span<const int> supply,
                             const Valuation& v, int player, long joint_cap) {
  std::vector<double> column(static_cast<std::size_t>(bids.players) * bids.cap);
  double expected_payment = 0.0;
  std::vector<std::vector<std::pair<int, double>>> dists(bids.goods);
  for (int j = 0; j < bids.goods; ++j) {
    for (int i = 0; i < bids.players; ++i)
      for (int x = 0; x < bids.cap; ++x)
        column[static_cast<std::size_t>(i) * bids.cap + x] = bids.at(i, j, x);
    dists[j] = exact_alloc_distribution(column, bids.players, bids.cap, supply[j], player);

    std::vector<double> sorted(column);
    const int total = bids.players * bids.cap;
    double price = 0.0;
    if (total > supply[j]) {
      std::nth_element(sorted.begin(), sorted.begin() + supply[j], sorted.end(), std::greater<>());
      price = sorted[supply[j]];
    }
    double mean_units = 0.0;
    for (auto [u, p] : dists[j]) mean_units += u * p;
    expected_payment += mean_units * price;
  }

  // Joint distribution of the bundle; tie-breaks are independent across goods.
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
      throw CapacityError("exact_utility_uniform: joint tie support too large");
    joint = std::move(next);
  }
  double expected_value = 0.0;
  for (const auto& [bundle, p] : joint) expected_value += p * v.eval(bundle);
  return expected_value - expected_payment;
}

UniformBids restrict_bids(const UniformBids& bids, std::span<const int> players_kept) {
  UniformBids sub = UniformBids::zeros(static_cast<int>(players_kept.size()), bids.goods, bids.cap);
  for (std::size_t s = 0; s < players_kept.size(); ++s) {
    const int i = players_kept[s];
    for (int j = 0; j < bids.goods; ++j)
      for (int x = 0; x < bids.cap; ++x) sub.at(static_cast<int>(s), j, x) = bids.at(i, j, x);
  }
  return sub;
}

Estimate noisy_expected_utility(const UniformBids& bids, const Valuation& v, int player,
                                const MarketConfig& cfg, std::span<const int> supply,
                                EvalMode mode, long trials, RngStream& rng) {
  const double delta = cfg.delta;
  const int n = bids.players;
  if (mode == EvalMode::Exact) {
    if (n > 20) throw CapacityError("noisy_expected_utility: exact mode needs players <= 20");
    const int others = n - 1;
    std::vector<int> kept;
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << others); ++mask) {
      kept.clear();
      double weight = 1.0 - delta;  // the player's own arrival
      int o = 0;
      for (int i = 0; i < n; ++i) {
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
      const UniformBids sub = restrict_bids(bids, kept);
      const int sub_index = static_cast<int>(
          std::find(kept.begin(), kept.end(), player) - kept.begin());
      total += weight * exact_utility_uniform(sub, supply, v, sub_index);
    }
    return {total, 0.0};
  }

  RunningStat stat;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    kept.clear();
    for (int i = 0; i < n; ++i)
      if (i == player || trial.bernoulli(1.0 - delta)) kept.push_back(i);
    const UniformBids sub = restrict_bids(bids, kept);
    const int sub_index = static_cast<int>(
        std::find(kept.begin(), kept.end(), player) - kept.begin());
    UniformOutcome out = run_simultaneous(sub, supply, trial);
    stat.add(utility(out, v, sub_index));
  }
  return {(1.0 - delta) * stat.mean(), (1.0 - delta) * stat.stderror()};
}

}  // namespace poa
