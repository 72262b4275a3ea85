#include <benchmark/benchmark.h>

#include "poa/approx_utility.hpp"
#include "poa/equilibrium.hpp"
#include "poa/greedy_auction.hpp"
#include "poa/uniform_auction.hpp"

namespace {

poa::UniformBids random_uniform_bids(int players, int goods, int cap, poa::RngStream& rng) {
  poa::UniformBids b = poa::UniformBids::zeros(players, goods, cap);
  for (int i = 0; i < players; ++i)
    for (int j = 0; j < goods; ++j) {
      double prev = 1.0;
      for (int x = 0; x < cap; ++x) {
        prev = rng.uniform(0.0, prev);
        b.at(i, j, x) = prev;
      }
    }
  return b;
}

void BM_RunSingleGood(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  poa::RngStream rng(7, 1);
  const poa::UniformBids bids = random_uniform_bids(n, 1, 2, rng);
  const poa::TieBreakOrder order = rng.permutation(n);
  std::vector<double> column(static_cast<std::size_t>(n) * 2);
  for (int i = 0; i < n; ++i)
    for (int x = 0; x < 2; ++x) column[static_cast<std::size_t>(i) * 2 + x] = bids.at(i, 0, x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(poa::run_single_good(column, n, 2, n / 2, order));
  }
}
BENCHMARK(BM_RunSingleGood)->Arg(64)->Arg(1024)->Arg(16384);

void BM_RunGreedy(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  poa::RngStream rng(7, 2);
  poa::GreedyBids bids;
  bids.goods = 4;
  for (int i = 0; i < n; ++i) {
    std::vector<int> interest{static_cast<int>(rng.below(4))};
    if (rng.bernoulli(0.5)) interest.push_back((interest[0] + 1) % 4);
    double first = rng.uniform(0.0, 1.0);
    bids.bids.push_back({interest, {first, rng.uniform(0.0, first)}});
  }
  const std::vector<int> supply{n / 4, n / 4, n / 4, n / 4};
  const poa::TiePriority priority = poa::draw_tie_priority(bids, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(poa::run_greedy(bids, supply, priority));
  }
}
BENCHMARK(BM_RunGreedy)->Arg(16)->Arg(128)->Arg(1024);

void BM_UtilityGapSample(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int n = 2 * k;
  poa::UniformBids bids = poa::UniformBids::zeros(n, 1, 1);
  for (int i = 0; i < n; ++i) bids.at(i, 0, 0) = 1.0;
  poa::MarketConfig cfg;
  cfg.players = n;
  cfg.goods = 1;
  cfg.delta = 0.5;
  cfg.supply = poa::SupplyModel::fixed({k});
  const poa::Valuation v = poa::Valuation::unit_demand({1.0});
  const std::vector<int> supply{k};
  poa::RngStream rng(7, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        poa::utility_gap_uniform(bids, v, 0, cfg, supply, poa::EvalMode::MonteCarlo, 64, rng));
  }
}
BENCHMARK(BM_UtilityGapSample)->Arg(64)->Arg(1024);

void BM_Hedge(benchmark::State& state) {
  struct PenniesGame : poa::Game {
    int num_players() const override { return 2; }
    int num_actions(int) const override { return 2; }
    double utility_sample(int player, std::span<const int> a, poa::RngStream&) const override {
      const bool match = a[0] == a[1];
      return player == 0 ? (match ? 1.0 : 0.0) : (match ? 0.0 : 1.0);
    }
    double welfare_sample(std::span<const int>, poa::RngStream&) const override { return 1.0; }
  } game;
  poa::RngStream rng(7, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(poa::regret_learning(game, state.range(0), -1.0, 1.0, rng));
  }
}
BENCHMARK(BM_Hedge)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
