#include "poa/greedy_auction.hpp"

#include <algorithm>
#include <numeric>

namespace poa {

namespace {

struct FlatBid {
  int player;
  int index;
  double value;
  std::uint64_t rank;
};

// Bids in consideration order: value descending, priority ascending.
std::vector<FlatBid> consideration_order(const GreedyBids& bids, const TiePriority& priority) {
  std::vector<FlatBid> flat;
  flat.reserve(bids.total_marginals());
  int slot = 0;
  for (int i = 0; i < bids.players(); ++i) {
    const auto& bid = bids.bids[i];
    for (std::size_t x = 0; x < bid.marginals.size(); ++x) {
      flat.push_back({i, static_cast<int>(x), bid.marginals[x], priority.rank[slot]});
      ++slot;
    }
  }
  std::sort(flat.begin(), flat.end(), [](const FlatBid& a, const FlatBid& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.rank < b.rank;
  });
  return flat;
}

// Walks the greedy allocation. A bid is accepted iff every item of its set
// has remaining supply; `infinite_good` (if >= 0) never runs out and is
// never consumed. Returns the trace in consideration order.
std::vector<AcceptanceRecord> greedy_walk(const GreedyBids& bids,
                                          const std::vector<FlatBid>& order,
                                          std::span<const int> supply, int skip_player,
                                          int infinite_good) {
  std::vector<int> remaining(supply.begin(), supply.end());
  std::vector<AcceptanceRecord> trace;
  trace.reserve(order.size());
  for (const FlatBid& fb : order) {
    if (fb.player == skip_player) continue;
    const auto& interest = bids.bids[fb.player].interest;
    bool ok = true;
    for (int j : interest) {
      if (j == infinite_good) continue;
      if (remaining[j] <= 0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (int j : interest) {
        if (j == infinite_good) continue;
        --remaining[j];
      }
    }
    trace.push_back({fb.player, fb.index, ok});
  }
  return trace;
}

double threshold_from_walk(const GreedyBids& bids, const std::vector<FlatBid>& order,
                           std::span<const int> supply, int good, int level, int skip_player) {
  const auto trace = greedy_walk(bids, order, supply, skip_player, good);
  int seen = 0;
  std::size_t pos = 0;
  for (const FlatBid& fb : order) {
    if (fb.player == skip_player) continue;
    const AcceptanceRecord& rec = trace[pos++];
    if (rec.accepted) {
      const auto& interest = bids.bids[fb.player].interest;
      if (std::find(interest.begin(), interest.end(), good) != interest.end()) {
        ++seen;
        if (seen == level) return fb.value;
      }
    }
  }
  return 0.0;
}

void check_profile(const GreedyBids& bids, std::span<const int> supply) {
  if (static_cast<int>(supply.size()) != bids.goods)
    throw std::invalid_argument("run_greedy: supply length != goods");
  for (const auto& bid : bids.bids) {
    if (bid.interest.empty())
      throw std::invalid_argument("run_greedy: empty interest set");
    for (int j : bid.interest)
      if (j < 0 || j >= bids.goods)
        throw std::invalid_argument("run_greedy: interest good out of range");
    for (std::size_t x = 1; x < bid.marginals.size(); ++x)
      if (bid.marginals[x] > bid.marginals[x - 1])
        throw std::invalid_argument("run_greedy: marginal bids must be non-increasing");
  }
}

}  // namespace

TiePriority draw_tie_priority(const GreedyBids& bids, RngStream& rng) {
  TiePriority p;
  const int total = bids.total_marginals();
  p.rank.resize(total);
  std::vector<int> perm = rng.permutation(total);
  for (int s = 0; s < total; ++s) p.rank[s] = static_cast<std::uint64_t>(perm[s]);
  return p;
}

GreedyOutcome run_greedy(const GreedyBids& bids, std::span<const int> supply,
                         const TiePriority& priority) {
  check_profile(bids, supply);
  const auto order = consideration_order(bids, priority);

  GreedyOutcome out;
  out.priority = priority;
  out.trace = greedy_walk(bids, order, supply, -1, -1);
  const int n = bids.players();
  out.alloc.assign(n, 0);
  std::size_t pos = 0;
  for (const FlatBid& fb : order) {
    if (out.trace[pos++].accepted) ++out.alloc[fb.player];
  }
  out.critical.assign(n, 0.0);
  out.payments.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double theta = 0.0;
    for (int j : bids.bids[i].interest)
      theta = std::max(theta, threshold_from_walk(bids, order, supply, j, supply[j] + 1, -1));
    out.critical[i] = theta;
    out.payments[i] = out.alloc[i] * theta;
    out.revenue += out.payments[i];
  }
  return out;
}

GreedyOutcome run_greedy(const GreedyBids& bids, std::span<const int> supply, RngStream& rng) {
  return run_greedy(bids, supply, draw_tie_priority(bids, rng));
}

double shadow_threshold(int good, int level, const GreedyBids& bids, std::span<const int> supply,
                        const TiePriority& priority, int skip_player) {
  if (level < 1) throw std::invalid_argument("shadow_threshold: level must be >= 1");
  check_profile(bids, supply);
  const auto order = consideration_order(bids, priority);
  return threshold_from_walk(bids, order, supply, good, level, skip_player);
}

double critical_price(int player, const GreedyBids& bids, std::span<const int> supply,
                      const TiePriority& priority) {
  check_profile(bids, supply);
  const auto order = consideration_order(bids, priority);
  double theta = 0.0;
  for (int j : bids.bids[player].interest)
    theta = std::max(theta, threshold_from_walk(bids, order, supply, j, supply[j] + 1, -1));
  return theta;
}

double critical_price_excluding(int player, int skip_player, const GreedyBids& bids,
                                std::span<const int> supply, const TiePriority& priority) {
  check_profile(bids, supply);
  const auto order = consideration_order(bids, priority);
  double theta = 0.0;
  for (int j : bids.bids[player].interest)
    theta = std::max(theta,
                     threshold_from_walk(bids, order, supply, j, supply[j] + 1, skip_player));
  return theta;
}

double greedy_utility(const GreedyBids& bids, const GreedyOutcome& out, const Valuation& v,
                      int player) {
  std::vector<int> bundle(bids.goods, 0);
  for (int j : bids.bids[player].interest) bundle[j] = out.alloc[player];
  return v.eval(bundle) - out.payments[player];
}

Estimate expected_utility_over_supply(const GreedyBids& bids, const Valuation& v, int player,
                                      const SupplyModel& model, EvalMode mode, long trials,
                                      RngStream& rng, int tie_trials) {
  if (tie_trials < 1) tie_trials = 1;
  if (mode == EvalMode::Exact) {
    if (model.support_size() > 10000)
      throw CapacityError("expected_utility_over_supply: supply support too large for exact mode");
    std::vector<TiePriority> priorities(tie_trials);
    for (int t = 0; t < tie_trials; ++t) {
      RngStream sub = rng.substream(static_cast<std::uint64_t>(t));
      priorities[t] = draw_tie_priority(bids, sub);
    }
    double total = 0.0;
    model.for_each_support([&](std::span<const int> supply, double prob) {
      double u = 0.0;
      for (const TiePriority& p : priorities) {
        const GreedyOutcome out = run_greedy(bids, supply, p);
        u += greedy_utility(bids, out, v, player);
      }
      total += prob * u / tie_trials;
    });
    return {total, 0.0};
  }

  RunningStat stat;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    const std::vector<int> supply = model.sample(trial);
    const GreedyOutcome out = run_greedy(bids, supply, trial);
    stat.add(greedy_utility(bids, out, v, player));
  }
  return {stat.mean(), stat.stderror()};
}

GreedyBids restrict_bids(const GreedyBids& bids, std::span<const int> players_kept) {
  GreedyBids sub;
  sub.goods = bids.goods;
  sub.bids.reserve(players_kept.size());
  for (int i : players_kept) sub.bids.push_back(bids.bids[i]);
  return sub;
}

TiePriority restrict_priority(const TiePriority& priority, const GreedyBids& bids,
                              std::span<const int> players_kept) {
  std::vector<int> offsets(bids.players() + 1, 0);
  for (int i = 0; i < bids.players(); ++i)
    offsets[i + 1] = offsets[i] + static_cast<int>(bids.bids[i].marginals.size());
  TiePriority sub;
  for (int i : players_kept)
    for (int s = offsets[i]; s < offsets[i + 1]; ++s) sub.rank.push_back(priority.rank[s]);
  return sub;
}

}  // namespace poa
