#include <algorithm>

#include "doctest.h"
#include "poa/equilibrium.hpp"
#include "poa/uniform_auction.hpp"
#include "poa/welfare.hpp"
#include "test_util.hpp"

using namespace poa;

TEST_CASE("all-zero valuations have a zero optimum") {
  std::vector<Valuation> vals;
  for (int i = 0; i < 3; ++i)
    vals.push_back(Valuation::capped_combinatorial(2, 1, [](std::span<const int>) { return 0.0; }));
  const OptResult opt = opt_exhaustive(vals, std::vector<int>{1, 1}, 1);
  CHECK(opt.value == 0.0);
}

TEST_CASE("concave single-good optimum equals the pooled-marginal oracle") {
  RngStream rng(61, 0);
  for (int instance = 0; instance < 100; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 3, r = 2, k = 3;
    std::vector<Valuation> vals;
    std::vector<std::vector<double>> pools;
    for (int i = 0; i < n; ++i) {
      const double first = inst.uniform(2.0, 3.0);
      const double second = inst.uniform(2.0, first);
      vals.push_back(Valuation::single_minded(1, r, {0}, {0.0, first, first + second}));
      pools.push_back({first, second});
    }
    const OptResult opt = opt_exhaustive(vals, std::vector<int>{k}, r);
    CHECK(opt.value == doctest::Approx(opt_pooled_marginals(pools, k)).epsilon(1e-12));
  }
}

TEST_CASE("two-good flexible/specialist optimum: brute force meets the closed form") {
  // t flexible unit-demand players worth 1 on either good, t half-value
  // specialists per good.
  const int t = 4;
  auto build = [&](int) {
    std::vector<Valuation> vals;
    for (int i = 0; i < t; ++i) vals.push_back(Valuation::unit_demand({1.0, 1.0}));
    for (int i = 0; i < t; ++i) vals.push_back(Valuation::unit_demand({0.5, 0.0}));
    for (int i = 0; i < t; ++i) vals.push_back(Valuation::unit_demand({0.0, 0.5}));
    return vals;
  };
  const std::vector<Valuation> vals = build(0);
  const OptResult opt = opt_exhaustive(vals, std::vector<int>{3, 2}, 1);
  CHECK(opt.value == doctest::Approx(4.5));
  CHECK(closed_form_supply_example_opt(t, 3, 2) == doctest::Approx(4.5));

  const int sweep_t = 6;
  std::vector<Valuation> sweep_vals;
  for (int i = 0; i < sweep_t; ++i) sweep_vals.push_back(Valuation::unit_demand({1.0, 1.0}));
  for (int i = 0; i < sweep_t; ++i) sweep_vals.push_back(Valuation::unit_demand({0.5, 0.0}));
  for (int i = 0; i < sweep_t; ++i) sweep_vals.push_back(Valuation::unit_demand({0.0, 0.5}));
  for (int ka = 0; ka <= sweep_t; ++ka) {
    for (int kb = 0; kb <= sweep_t; ++kb) {
      if (ka + kb == 0) continue;
      const OptResult cell = opt_exhaustive(sweep_vals, std::vector<int>{ka, kb}, 1);
      CHECK(cell.value ==
            doctest::Approx(closed_form_supply_example_opt(sweep_t, ka, kb)).epsilon(1e-12));
    }
  }
  CHECK(closed_form_supply_example_opt(7, 0, 0) == 0.0);
}

TEST_CASE("single-minded optimum: separable sets and the bundle-scarcity instance") {
  SUBCASE("disjoint interest sets sum their standalone bests") {
    std::vector<Valuation> vals;
    vals.push_back(Valuation::single_minded(3, 2, {0}, {0.0, 1.0, 1.5}));
    vals.push_back(Valuation::single_minded(3, 2, {1}, {0.0, 0.8, 1.0}));
    vals.push_back(Valuation::single_minded(3, 2, {2}, {0.0, 0.6, 0.7}));
    const OptResult opt = opt_single_minded(vals, std::vector<int>{2, 1, 2});
    CHECK(opt.value == doctest::Approx(1.5 + 0.8 + 0.7));
  }
  SUBCASE("bundle-scarcity instance routes pairs to the large bidders") {
    std::vector<Valuation> vals;
    vals.push_back(Valuation::single_minded(2, 1, {0}, {0.0, 0.5}));
    vals.push_back(Valuation::single_minded(2, 1, {1}, {0.0, 2.0}));
    vals.push_back(Valuation::single_minded(2, 1, {0}, {0.0, 0.25}));
    for (int l = 0; l < 3; ++l)
      vals.push_back(Valuation::single_minded(2, 1, {0, 1}, {0.0, 1.0}));
    const OptResult opt = opt_single_minded(vals, std::vector<int>{3, 3});
    CHECK(opt.value == doctest::Approx(2.0 + 2.0 + 0.5));
    CHECK(opt.bundle(1, 2)[1] == 1);  // the high bidder keeps one unit of good 1
    CHECK(opt.bundle(0, 2)[0] == 1);  // the half-value bidder gets the leftover
  }
  SUBCASE("single item, unit demands: top-k values win") {
    std::vector<Valuation> vals;
    const double values[] = {0.9, 0.2, 0.6, 0.8, 0.4};
    for (double v : values) vals.push_back(Valuation::single_minded(1, 1, {0}, {0.0, v}));
    const OptResult opt = opt_single_minded(vals, std::vector<int>{3});
    CHECK(opt.value == doctest::Approx(0.9 + 0.8 + 0.6));
  }
}

TEST_CASE("optimum dominates every mechanism outcome") {
  RngStream rng(62, 0);
  for (int instance = 0; instance < 300; ++instance) {
    RngStream inst = rng.substream(instance);
    const int n = 2 + static_cast<int>(inst.below(3));
    const int m = 1 + static_cast<int>(inst.below(2));
    const int r = 1 + static_cast<int>(inst.below(2));
    std::vector<Valuation> vals;
    for (int i = 0; i < n; ++i)
      vals.push_back(testutil::random_monotone_valuation(m, r, 1.0, 0.05, inst));
    std::vector<int> supply(m);
    for (int j = 0; j < m; ++j) supply[j] = 1 + static_cast<int>(inst.below(3));
    const UniformBids b = testutil::random_uniform_bids(n, m, r, 1.0, inst);
    UniformOutcome out = run_simultaneous(b, supply, inst);
    const double welfare = fill_welfare(out, vals);
    const OptResult opt = opt_exhaustive(vals, supply, r);
    CHECK(opt.value >= welfare - 1e-9);
  }
}

TEST_CASE("expected optimum over arrivals: delta zero is deterministic") {
  RngStream rng(63, 0);
  std::vector<Valuation> vals;
  for (int i = 0; i < 5; ++i)
    vals.push_back(testutil::random_monotone_valuation(2, 1, 1.0, 0.05, rng));
  const std::vector<int> supply{2, 1};
  const Estimate e =
      expected_opt_arrival(vals, 0.0, supply, 1, EvalMode::Exact, 0, rng);
  CHECK(e.value == doctest::Approx(opt_exhaustive(vals, supply, 1).value));
}

TEST_CASE("expected optimum of the supply example approaches 11t/12") {
  const int t = 2000;
  const SupplyModel model =
      SupplyModel::uniform_integer({0, 0}, {t, t});
  RngStream rng(64, 0);
  const Estimate e = expected_opt_supply(
      [&](std::span<const int> k) {
        return closed_form_supply_example_opt(t, k[0], k[1]) / t;
      },
      model, EvalMode::MonteCarlo, 10000, rng);
  CHECK(std::abs(e.value - 11.0 / 12.0) < 0.005);
}

TEST_CASE("overlap integral of two uniforms is one sixth") {
  const int t = 2000;
  const SupplyModel model = SupplyModel::uniform_integer({0, 0}, {t, t});
  RngStream rng(65, 0);
  const Estimate e = expected_opt_supply(
      [&](std::span<const int> k) {
        return std::max(static_cast<double>(k[0]) / t + static_cast<double>(k[1]) / t - 1.0,
                        0.0);
      },
      model, EvalMode::MonteCarlo, 1000000, rng);
  CHECK(std::abs(e.value - 1.0 / 6.0) < 1e-3);
}

TEST_CASE("search budget violations raise capacity errors") {
  std::vector<Valuation> vals;
  for (int i = 0; i < 12; ++i)
    vals.push_back(Valuation::unit_demand({1.0, 0.9, 0.8}));
  CHECK_THROWS_AS(opt_exhaustive(vals, std::vector<int>{4, 4, 4}, 1, 50), CapacityError);
}
