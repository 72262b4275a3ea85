#include "poa/welfare.hpp"

#include <algorithm>
#include <cmath>

namespace poa {

namespace {

struct Candidate {
  std::vector<int> bundle;
  double value;
};

// All clamped bundles with dominated ones removed: a bundle is dropped when
// some componentwise-smaller bundle is worth at least as much.
std::vector<Candidate> candidate_bundles(const Valuation& v, std::span<const int> supply,
                                         int cap) {
  const int goods = static_cast<int>(supply.size());
  std::vector<int> limit(goods);
  for (int j = 0; j < goods; ++j) limit[j] = std::min(cap, supply[j]);

  std::vector<Candidate> all;
  std::vector<int> x(goods, 0);
  while (true) {
    all.push_back({x, v.eval(x)});
    int j = 0;
    while (j < goods) {
      if (x[j] < limit[j]) {
        ++x[j];
        break;
      }
      x[j] = 0;
      ++j;
    }
    if (j == goods) break;
  }
  std::vector<Candidate> kept;
  for (const Candidate& c : all) {
    bool dominated = false;
    for (const Candidate& d : all) {
      if (&d == &c) continue;
      bool leq = true, strictly_less = false;
      for (int j = 0; j < goods; ++j) {
        if (d.bundle[j] > c.bundle[j]) {
          leq = false;
          break;
        }
        if (d.bundle[j] < c.bundle[j]) strictly_less = true;
      }
      if (leq && strictly_less && d.value >= c.value) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  return kept;
}

struct SearchState {
  std::span<const Valuation> valuations;
  std::vector<std::vector<Candidate>> candidates;
  std::vector<double> suffix_best;  // sum of per-player best values from i on
  std::vector<int> remaining;
  std::vector<int> pick;  // candidate index per player
  std::vector<int> best_pick;
  double best = -1.0;
  long nodes = 0;
  long budget = 0;

  void dfs(int i) {
    if (++nodes > budget) throw CapacityError("opt search exceeded its node budget");
    if (i == static_cast<int>(candidates.size())) {
      double total = 0.0;
      for (std::size_t p = 0; p < candidates.size(); ++p)
        total += candidates[p][pick[p]].value;
      if (total > best) {
        best = total;
        best_pick = pick;
      }
      return;
    }
    double partial = 0.0;
    for (int p = 0; p < i; ++p) partial += candidates[p][pick[p]].value;
    if (partial + suffix_best[i] <= best) return;

    for (std::size_t c = 0; c < candidates[i].size(); ++c) {
      const auto& cand = candidates[i][c];
      bool feasible = true;
      for (std::size_t j = 0; j < remaining.size(); ++j) {
        if (cand.bundle[j] > remaining[j]) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
      pick[i] = static_cast<int>(c);
      for (std::size_t j = 0; j < remaining.size(); ++j) remaining[j] -= cand.bundle[j];
      dfs(i + 1);
      for (std::size_t j = 0; j < remaining.size(); ++j) remaining[j] += cand.bundle[j];
    }
  }
};

}  // namespace

OptResult opt_exhaustive(std::span<const Valuation> valuations, std::span<const int> supply,
                         int cap, long node_budget) {
  const int n = static_cast<int>(valuations.size());
  const int goods = static_cast<int>(supply.size());

  SearchState st;
  st.valuations = valuations;
  st.candidates.reserve(n);
  for (const Valuation& v : valuations) st.candidates.push_back(candidate_bundles(v, supply, cap));
  st.suffix_best.assign(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double best_val = 0.0;
    for (const Candidate& c : st.candidates[i]) best_val = std::max(best_val, c.value);
    st.suffix_best[i] = st.suffix_best[i + 1] + best_val;
  }
  st.remaining.assign(supply.begin(), supply.end());
  st.pick.assign(n, 0);
  st.best_pick.assign(n, 0);
  st.budget = node_budget;
  st.dfs(0);

  OptResult res;
  res.method = OptMethod::BranchBound;
  res.alloc.assign(static_cast<std::size_t>(n) * goods, 0);
  for (int i = 0; i < n; ++i) {
    const auto& bundle = st.candidates[i][st.best_pick[i]].bundle;
    for (int j = 0; j < goods; ++j) res.alloc[static_cast<std::size_t>(i) * goods + j] = bundle[j];
  }
  double check = 0.0;
  for (int i = 0; i < n; ++i) check += valuations[i].eval(res.bundle(i, goods));
  res.value = check;
  if (std::abs(check - st.best) > 1e-9)
    throw std::logic_error("opt_exhaustive: witness does not reproduce the reported value");
  return res;
}

OptResult opt_single_minded(std::span<const Valuation> valuations, std::span<const int> supply,
                            long node_budget) {
  for (const Valuation& v : valuations)
    if (v.kind() != Valuation::Kind::SingleMinded)
      throw std::invalid_argument("opt_single_minded: all valuations must be single-minded");
  OptResult res = opt_exhaustive(valuations, supply, valuations.empty() ? 1 : valuations[0].cap(),
                                 node_budget);
  res.method = OptMethod::BranchBound;
  return res;
}

double closed_form_supply_example_opt(int t, int k_a, int k_b) {
  if (t < 1) throw std::invalid_argument("closed_form_supply_example_opt: t >= 1 required");
  if (k_a < 0 || k_b < 0 || k_a > t || k_b > t)
    throw std::invalid_argument("closed_form_supply_example_opt: supplies must lie in [0, t]");
  const int sum = k_a + k_b;
  return std::min(sum, t) + 0.5 * std::max(sum - t, 0);
}

double opt_pooled_marginals(const std::vector<std::vector<double>>& marginals, int units) {
  std::vector<double> pool;
  for (const auto& m : marginals) {
    for (std::size_t x = 1; x < m.size(); ++x)
      if (m[x] > m[x - 1])
        throw std::invalid_argument("opt_pooled_marginals: marginal lists must be non-increasing");
    pool.insert(pool.end(), m.begin(), m.end());
  }
  std::sort(pool.begin(), pool.end(), std::greater<>());
  double total = 0.0;
  for (int u = 0; u < units && u < static_cast<int>(pool.size()); ++u) total += pool[u];
  return total;
}

Estimate expected_opt_arrival(std::span<const Valuation> valuations, double delta,
                              std::span<const int> supply, int cap, EvalMode mode, long trials,
                              RngStream& rng, long node_budget) {
  const int n = static_cast<int>(valuations.size());
  auto opt_of = [&](const std::vector<int>& kept) {
    std::vector<Valuation> sub;
    sub.reserve(kept.size());
    for (int i : kept) sub.push_back(valuations[i]);
    return sub.empty() ? 0.0 : opt_exhaustive(sub, supply, cap, node_budget).value;
  };

  if (mode == EvalMode::Exact) {
    if (n > 20) throw CapacityError("expected_opt_arrival: exact mode needs players <= 20");
    double total = 0.0;
    std::vector<int> kept;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      kept.clear();
      double weight = 1.0;
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          kept.push_back(i);
          weight *= 1.0 - delta;
        } else {
          weight *= delta;
        }
      }
      if (weight == 0.0) continue;
      total += weight * opt_of(kept);
    }
    return {total, 0.0};
  }

  RunningStat stat;
  std::vector<int> kept;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    kept.clear();
    for (int i = 0; i < n; ++i)
      if (trial.bernoulli(1.0 - delta)) kept.push_back(i);
    stat.add(opt_of(kept));
  }
  return {stat.mean(), stat.stderror()};
}

Estimate expected_opt_supply(const std::function<double(std::span<const int>)>& opt_of_supply,
                             const SupplyModel& model, EvalMode mode, long trials,
                             RngStream& rng) {
  if (mode == EvalMode::Exact) {
    if (model.support_size() > 100000)
      throw CapacityError("expected_opt_supply: supply support too large for exact mode");
    double total = 0.0;
    model.for_each_support(
        [&](std::span<const int> supply, double prob) { total += prob * opt_of_supply(supply); });
    return {total, 0.0};
  }
  RunningStat stat;
  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    const std::vector<int> supply = model.sample(trial);
    stat.add(opt_of_supply(supply));
  }
  return {stat.mean(), stat.stderror()};
}

}  // namespace poa
