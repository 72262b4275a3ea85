#include <algorithm>

#include "doctest.h"
#include "poa/greedy_auction.hpp"
#include "poa/smoothness.hpp"
#include "poa/welfare.hpp"
#include "test_util.hpp"

using namespace poa;

namespace {

GreedyBids bundle_scarcity_instance(int large_count) {
  GreedyBids bids;
  bids.goods = 2;
  bids.bids.push_back({{0}, {0.5}});
  bids.bids.push_back({{1}, {2.0}});
  bids.bids.push_back({{0}, {0.25}});
  for (int l = 0; l < large_count; ++l) bids.bids.push_back({{0, 1}, {1.0}});
  return bids;
}

TiePriority slot_priority(const GreedyBids& bids) {
  TiePriority p;
  p.rank.resize(bids.total_marginals());
  for (std::size_t s = 0; s < p.rank.size(); ++s) p.rank[s] = s;
  return p;
}

// Payment probe: insert a one-unit shadow bidder on {good} into the run
// where only that good's supply is idealized, and grid-search the largest
// bid at which it would still rank outside the `level` highest accepted
// bids containing the good (level = k_j + 1, the highest-losing-bid slot).
double shadow_probe(const GreedyBids& bids, int good, int level, std::span<const int> supply,
                    const TiePriority& priority, double step) {
  GreedyBids with_shadow = bids;
  TiePriority shadow_priority = priority;
  with_shadow.bids.push_back({{good}, {0.0}});
  shadow_priority.rank.push_back(priority.rank.size() + 1000);  // considered last among equals
  const int shadow = with_shadow.players() - 1;

  std::vector<int> idealized(supply.begin(), supply.end());
  idealized[good] = bids.total_marginals() + 2;
  double best = -1.0;  // -1: never rejected anywhere on the grid
  for (double beta = 0.0; beta <= 2.0 + 1e-9; beta += step) {
    with_shadow.bids[shadow].marginals[0] = beta;
    const GreedyOutcome out = run_greedy(with_shadow, idealized, shadow_priority);
    int above = 0;
    for (const AcceptanceRecord& rec : out.trace) {
      if (!rec.accepted || rec.player == shadow) continue;
      const auto& interest = with_shadow.bids[rec.player].interest;
      if (std::find(interest.begin(), interest.end(), good) == interest.end()) continue;
      if (with_shadow.bids[rec.player].marginals[rec.index] > beta) ++above;
    }
    if (above >= level) best = beta;  // still rejected at this bid
  }
  return best;
}

}  // namespace

TEST_CASE("lone bidder gets both units free") {
  GreedyBids bids;
  bids.goods = 1;
  bids.bids.push_back({{0}, {3.0, 2.0}});
  RngStream rng(1, 0);
  const GreedyOutcome out = run_greedy(bids, std::vector<int>{5}, rng);
  CHECK(out.alloc[0] == 2);
  CHECK(out.critical[0] == 0.0);
  CHECK(out.payments[0] == 0.0);
  CHECK(out.revenue == 0.0);
}

TEST_CASE("bundle-scarcity trace: the rejected low bid sets the price") {
  const GreedyBids bids = bundle_scarcity_instance(3);
  const std::vector<int> supply{3, 3};
  const GreedyOutcome out = run_greedy(bids, supply, slot_priority(bids));

  CHECK(out.alloc[0] == 1);  // the half-value bidder takes the last unit of item 0
  CHECK(out.alloc[1] == 1);
  CHECK(out.alloc[2] == 0);
  int large_total = 0;
  for (int l = 0; l < 3; ++l) large_total += out.alloc[3 + l];
  CHECK(large_total == 2);  // item 1 runs out after the high bid

  CHECK(out.critical[0] == doctest::Approx(0.25));
  CHECK(out.payments[0] == doctest::Approx(0.25));
  const Valuation v = Valuation::single_minded(2, 1, {0}, {0.0, 0.5});
  CHECK(greedy_utility(bids, out, v, 0) == doctest::Approx(0.25));

  // Shadow list for item 0 at infinite supply: 1, 1, 1/2, 1/4.
  CHECK(shadow_threshold(0, 4, bids, supply, out.priority) == doctest::Approx(0.25));
  CHECK(shadow_threshold(0, 5, bids, supply, out.priority) == 0.0);
}

TEST_CASE("no accepted bid containing the good means a zero threshold") {
  GreedyBids bids;
  bids.goods = 2;
  bids.bids.push_back({{0}, {1.0}});
  const std::vector<int> supply{1, 1};
  CHECK(shadow_threshold(1, 1, bids, supply, slot_priority(bids)) == 0.0);
}

TEST_CASE("shadow threshold equals the literal big-supply rerun") {
  RngStream rng(7, 0);
  for (int instance = 0; instance < 300; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 3 + static_cast<int>(inst.below(3));
    const GreedyBids bids = testutil::random_greedy_bids(n, 3, 2, 2, 1.0, inst);
    std::vector<int> supply{1 + static_cast<int>(inst.below(3)),
                            1 + static_cast<int>(inst.below(3)),
                            1 + static_cast<int>(inst.below(3))};
    const TiePriority priority = draw_tie_priority(bids, inst);
    const int good = static_cast<int>(inst.below(3));
    const int level = 1 + static_cast<int>(inst.below(4));

    // Independent route: actually hand the good a supply larger than the
    // total bid count and read the accepted list off the outcome trace.
    std::vector<int> big = supply;
    big[good] = bids.total_marginals() + 1;
    const GreedyOutcome out = run_greedy(bids, big, priority);
    std::vector<double> accepted;
    for (const AcceptanceRecord& rec : out.trace) {
      if (!rec.accepted) continue;
      const auto& interest = bids.bids[rec.player].interest;
      if (std::find(interest.begin(), interest.end(), good) != interest.end())
        accepted.push_back(bids.bids[rec.player].marginals[rec.index]);
    }
    std::sort(accepted.begin(), accepted.end(), std::greater<>());
    const double expected =
        static_cast<int>(accepted.size()) >= level ? accepted[level - 1] : 0.0;
    CHECK(shadow_threshold(good, level, bids, supply, priority) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("payments match the shadow-bidder probe on grid-valued instances") {
  RngStream rng(8, 0);
  const double step = 0.02;
  for (int instance = 0; instance < 60; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 5;
    GreedyBids bids = testutil::random_greedy_bids(n, 3, 2, 2, 1.0, inst);
    // Snap bids to an off-probe grid so probe bids never tie with real bids.
    for (auto& bid : bids.bids) {
      for (double& m : bid.marginals)
        m = std::floor(m / step) * step + step / 2;
      std::sort(bid.marginals.begin(), bid.marginals.end(), std::greater<>());
    }
    std::vector<int> supply{1 + static_cast<int>(inst.below(3)),
                            1 + static_cast<int>(inst.below(3)),
                            1 + static_cast<int>(inst.below(3))};
    const TiePriority priority = draw_tie_priority(bids, inst);
    const GreedyOutcome out = run_greedy(bids, supply, priority);
    for (int i = 0; i < n; ++i) {
      double probe = -1.0;
      for (int j : bids.bids[i].interest)
        probe = std::max(probe, shadow_probe(bids, j, supply[j] + 1, supply, priority, step));
      // The probe walks the grid from below; the threshold sits half a step up.
      const double oracle = probe < 0.0 ? 0.0 : probe + step / 2;
      CHECK(out.critical[i] == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(out.payments[i] == doctest::Approx(out.alloc[i] * oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("critical price of an uncontested singleton is zero") {
  GreedyBids bids;
  bids.goods = 2;
  bids.bids.push_back({{0}, {0.9}});
  bids.bids.push_back({{1}, {0.8}});
  const std::vector<int> supply{1, 1};
  CHECK(critical_price(0, bids, supply, slot_priority(bids)) == 0.0);
}

TEST_CASE("expected utility over supply: fixed supply reduces to one run") {
  const GreedyBids bids = bundle_scarcity_instance(3);
  const Valuation v = Valuation::single_minded(2, 1, {0}, {0.0, 0.5});
  const SupplyModel fixed = SupplyModel::fixed({3, 3});
  RngStream rng(9, 0);
  const Estimate e =
      expected_utility_over_supply(bids, v, 0, fixed, EvalMode::Exact, 0, rng, 1);
  CHECK(e.value == doctest::Approx(0.25));
}

TEST_CASE("expected utility over supply matches exhaustive pair enumeration") {
  const int t = 4;
  const GreedyBids bids = bundle_scarcity_instance(3);
  const Valuation v = Valuation::single_minded(2, 1, {0}, {0.0, 0.5});
  const SupplyModel model = SupplyModel::uniform_integer({0, 0}, {t, t});
  RngStream rng(10, 0);
  const Estimate e = expected_utility_over_supply(bids, v, 0, model, EvalMode::Exact, 0, rng, 1);

  RngStream oracle_rng(10, 0);
  oracle_rng = oracle_rng.substream(0);
  const TiePriority priority = draw_tie_priority(bids, oracle_rng);
  double expected = 0.0;
  for (int ka = 0; ka <= t; ++ka) {
    for (int kb = 0; kb <= t; ++kb) {
      const GreedyOutcome out = run_greedy(bids, std::vector<int>{ka, kb}, priority);
      expected += greedy_utility(bids, out, v, 0) / ((t + 1) * (t + 1));
    }
  }
  CHECK(e.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a zero-value bidder bidding zero pays nothing") {
  GreedyBids bids;
  bids.goods = 1;
  bids.bids.push_back({{0}, {0.0}});
  bids.bids.push_back({{0}, {0.6}});
  const Valuation zero = Valuation::single_minded(1, 1, {0}, {0.0, 0.0});
  const SupplyModel model = SupplyModel::uniform_integer({0}, {3});
  RngStream rng(11, 0);
  const Estimate e = expected_utility_over_supply(bids, zero, 0, model, EvalMode::Exact, 0, rng);
  CHECK(e.value == doctest::Approx(0.0));
}

TEST_CASE("greedy welfare is a d-approximation of the single-minded optimum") {
  RngStream rng(12, 0);
  for (int instance = 0; instance < 200; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 3 + static_cast<int>(inst.below(4));
    const int m = 2 + static_cast<int>(inst.below(2));
    const int r = 1 + static_cast<int>(inst.below(2));
    std::vector<Valuation> vals;
    std::vector<int> supply(m);
    for (int j = 0; j < m; ++j) supply[j] = 1 + static_cast<int>(inst.below(3));
    int d = 1;
    for (int i = 0; i < n; ++i) {
      const GreedyBids sample = testutil::random_greedy_bids(1, m, r, 2, 1.0, inst);
      std::vector<double> curve(r + 1, 0.0);
      for (int l = 1; l <= r; ++l) curve[l] = curve[l - 1] + sample.bids[0].marginals[l - 1];
      vals.push_back(Valuation::single_minded(m, r, sample.bids[0].interest, curve));
      d = std::max(d, static_cast<int>(sample.bids[0].interest.size()));
    }
    const GreedyBids truthful = greedy_truthful_deviation(vals, r);
    const TiePriority priority = draw_tie_priority(truthful, inst);
    const GreedyOutcome out = run_greedy(truthful, supply, priority);
    double welfare = 0.0;
    for (int i = 0; i < n; ++i) {
      std::vector<int> bundle(m, 0);
      for (int j : truthful.bids[i].interest) bundle[j] = out.alloc[i];
      welfare += vals[i].eval(bundle);
    }
    const OptResult opt = opt_single_minded(vals, supply);
    CHECK(opt.value <= d * welfare + 1e-9);
  }
}

TEST_CASE("bidding strictly around the critical price flips the allocation") {
  // With single-item interest sets the critical price is a true threshold
  // (each good clears as a k-highest-bids auction); with bundles a repriced
  // bid moves later in the order and can lose anyway, so the two-sided flip
  // is only asserted for singleton markets and the one-sided loss below.
  RngStream rng(13, 0);
  int checked = 0;
  for (int instance = 0; instance < 300; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 4 + static_cast<int>(inst.below(3));
    GreedyBids bids = testutil::random_greedy_bids(n, 3, 1, 1, 1.0, inst);
    std::vector<int> supply{1 + static_cast<int>(inst.below(2)),
                            1 + static_cast<int>(inst.below(2)),
                            1 + static_cast<int>(inst.below(2))};
    const TiePriority priority = draw_tie_priority(bids, inst);
    const GreedyOutcome out = run_greedy(bids, supply, priority);
    for (int i = 0; i < n; ++i) {
      if (out.alloc[i] == 0 || out.critical[i] <= 0.0) continue;
      ++checked;
      GreedyBids below = bids;
      below.bids[i].marginals[0] = std::max(0.0, out.critical[i] - 1e-6);
      const GreedyOutcome out_below = run_greedy(below, supply, priority);
      CHECK(out_below.alloc[i] == 0);
      GreedyBids above = bids;
      above.bids[i].marginals[0] = std::min(2.0, out.critical[i] + 1e-6);
      const GreedyOutcome out_above = run_greedy(above, supply, priority);
      CHECK(out_above.alloc[i] >= 1);
    }
  }
  CHECK(checked > 50);

  // Bundle markets only keep the loss direction.
  RngStream rng2(13, 1);
  for (int instance = 0; instance < 300; ++instance) {
    RngStream inst = rng2.substream(instance);
    const int n = 4 + static_cast<int>(inst.below(3));
    GreedyBids bids = testutil::random_greedy_bids(n, 3, 1, 2, 1.0, inst);
    std::vector<int> supply{1 + static_cast<int>(inst.below(2)),
                            1 + static_cast<int>(inst.below(2)),
                            1 + static_cast<int>(inst.below(2))};
    const TiePriority priority = draw_tie_priority(bids, inst);
    const GreedyOutcome out = run_greedy(bids, supply, priority);
    for (int i = 0; i < n; ++i) {
      if (out.alloc[i] == 0 || out.critical[i] <= 0.0) continue;
      GreedyBids below = bids;
      below.bids[i].marginals[0] = std::max(0.0, out.critical[i] - 1e-6);
      const GreedyOutcome out_below = run_greedy(below, supply, priority);
      CHECK(out_below.alloc[i] == 0);
    }
  }
}

TEST_CASE("a bundle bid above its critical price can still lose") {
  // The triple bidder and the strong pair crowd the flexible {1,2} bid out
  // of both items, yet every idealized list stays short of its level, so
  // that bid's critical price is 0. Raising it cannot help.
  GreedyBids bids;
  bids.goods = 3;
  bids.bids.push_back({{0, 1, 2}, {1.0}});
  bids.bids.push_back({{0, 1, 2}, {0.75}});
  bids.bids.push_back({{0, 1}, {0.5}});
  bids.bids.push_back({{2}, {0.5}});
  bids.bids.push_back({{1, 2}, {0.25}});
  const std::vector<int> supply{2, 2, 3};
  TiePriority priority;
  priority.rank = {0, 1, 2, 3, 4};
  const GreedyOutcome out = run_greedy(bids, supply, priority);
  CHECK(out.alloc[4] == 0);
  CHECK(out.critical[4] == 0.0);
  GreedyBids raised = bids;
  raised.bids[4].marginals[0] = 0.26;  // strictly above the critical price
  const GreedyOutcome out_raised = run_greedy(raised, supply, priority);
  CHECK(out_raised.alloc[4] == 0);
}

TEST_CASE("unexhausted goods always carry a zero shadow threshold") {
  RngStream rng(14, 0);
  for (int instance = 0; instance < 400; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 3 + static_cast<int>(inst.below(4));
    const int m = 2 + static_cast<int>(inst.below(2));
    const GreedyBids bids = testutil::random_greedy_bids(n, m, 2, 2, 1.0, inst);
    std::vector<int> supply(m);
    for (int j = 0; j < m; ++j) supply[j] = 1 + static_cast<int>(inst.below(4));
    const TiePriority priority = draw_tie_priority(bids, inst);
    const GreedyOutcome out = run_greedy(bids, supply, priority);
    std::vector<int> sold(m, 0);
    for (const AcceptanceRecord& rec : out.trace) {
      if (rec.accepted)
        for (int j : bids.bids[rec.player].interest) ++sold[j];
    }
    for (int j = 0; j < m; ++j) {
      if (sold[j] < supply[j])
        CHECK(shadow_threshold(j, supply[j] + 1, bids, supply, priority) == 0.0);
    }
  }
}

TEST_CASE("invalid greedy inputs are rejected") {
  GreedyBids empty_set;
  empty_set.goods = 1;
  empty_set.bids.push_back({{}, {1.0}});
  RngStream rng(15, 0);
  CHECK_THROWS_AS(run_greedy(empty_set, std::vector<int>{1}, rng), std::invalid_argument);

  GreedyBids increasing;
  increasing.goods = 1;
  increasing.bids.push_back({{0}, {0.5, 0.7}});
  CHECK_THROWS_AS(run_greedy(increasing, std::vector<int>{1}, rng), std::invalid_argument);

  const GreedyBids bids = bundle_scarcity_instance(2);
  const SupplyModel huge = SupplyModel::uniform_integer({0, 0}, {200, 200});
  const Valuation v = Valuation::single_minded(2, 1, {0}, {0.0, 0.5});
  CHECK_THROWS_AS(expected_utility_over_supply(bids, v, 0, huge, EvalMode::Exact, 0, rng),
                  CapacityError);
}
