#include "doctest.h"
#include "poa/market.hpp"
#include "poa/uniform_auction.hpp"
#include "test_util.hpp"

using namespace poa;

TEST_CASE("rng streams replay and substreams diverge") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  RngStream s1 = a.substream(1), s2 = a.substream(2);
  CHECK(s1.next_u64() != s2.next_u64());

  RngStream p(3, 0);
  const std::vector<int> perm = p.permutation(20);
  std::vector<bool> seen(20, false);
  for (int v : perm) {
    CHECK(v >= 0);
    CHECK(v < 20);
    CHECK(!seen[v]);
    seen[v] = true;
  }
}

TEST_CASE("unit-demand valuation of the zero bundle is 0") {
  const Valuation v = Valuation::unit_demand({3.0, 0.0});
  const std::vector<int> zero{0, 0};
  CHECK(v.eval(zero) == 0.0);
  const std::vector<int> one{1, 0};
  CHECK(v.eval(one) == 3.0);
}

TEST_CASE("single-minded valuation clamps at the demand cap") {
  const int r = 3;
  std::vector<double> curve(r + 1);
  for (int l = 0; l <= r; ++l) curve[l] = l;
  const Valuation v = Valuation::single_minded(2, r, {0, 1}, curve);
  const std::vector<int> big{r + 5, r + 5};
  CHECK(v.eval(big) == doctest::Approx(r));
  const std::vector<int> partial{r + 5, 1};
  CHECK(v.eval(partial) == doctest::Approx(1.0));
}

TEST_CASE("capped-combinatorial oracle is reproduced exactly within caps") {
  RngStream rng(11, 0);
  const int goods = 2, cap = 2;
  const Valuation v = testutil::random_monotone_valuation(goods, cap, 1.0, 0.05, rng);
  for (int probe = 0; probe < 100; ++probe) {
    std::vector<int> x(goods);
    for (int j = 0; j < goods; ++j) x[j] = static_cast<int>(rng.uniform_int(0, cap));
    std::vector<int> clamped = x;
    const double direct = v.eval(x);
    CHECK(v.eval(clamped) == direct);
    // Clamp idempotence: adding units past the cap changes nothing.
    std::vector<int> inflated = x;
    for (int j = 0; j < goods; ++j) inflated[j] += cap + 2;
    CHECK(v.eval(inflated) == v.eval(std::vector<int>(goods, cap)));
  }
}

TEST_CASE("bid profile validation flags monotonicity and range breaks") {
  MarketConfig cfg;
  cfg.players = 1;
  cfg.goods = 1;
  cfg.demand_cap = 3;
  cfg.bid_cap = 5.0;
  cfg.value_cap = 5.0;
  cfg.value_floor = 1.0;
  cfg.supply = SupplyModel::fixed({1});

  UniformBids ok = UniformBids::zeros(1, 1, 3);
  ok.at(0, 0, 0) = 3;
  ok.at(0, 0, 1) = 2;
  ok.at(0, 0, 2) = 1;
  CHECK(validate_bid_profile(ok, cfg).empty());

  cfg.demand_cap = 2;
  UniformBids inc = UniformBids::zeros(1, 1, 2);
  inc.at(0, 0, 0) = 1;
  inc.at(0, 0, 1) = 2;
  const auto v1 = validate_bid_profile(inc, cfg);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0].kind == BidViolation::Kind::Monotonicity);
  CHECK(v1[0].index == 1);

  UniformBids range = UniformBids::zeros(1, 1, 2);
  range.at(0, 0, 0) = 6;
  range.at(0, 0, 1) = 1;
  const auto v2 = validate_bid_profile(range, cfg);
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].kind == BidViolation::Kind::Range);
  CHECK(v2[0].index == 0);
}

TEST_CASE("arrival sampling: deterministic replay and binomial mean") {
  RngStream rng(5, 1);
  const ArrivalVector all = sample_arrival(0.0, 32, rng);
  for (auto z : all) CHECK(z == 1);

  RngStream a(5, 2), b(5, 2);
  CHECK(sample_arrival(0.3, 100, a) == sample_arrival(0.3, 100, b));

  RngStream big(5, 3);
  const ArrivalVector z = sample_arrival(0.5, 100000, big);
  long total = 0;
  for (auto zi : z) total += zi;
  const double mean = static_cast<double>(total) / 100000.0;
  CHECK(mean > 0.494);
  CHECK(mean < 0.506);

  CHECK_THROWS_AS(sample_arrival(1.0, 4, rng), std::invalid_argument);
}

TEST_CASE("supply sampling: fixed verbatim, uniform frequencies, degenerate range") {
  RngStream rng(6, 1);
  CHECK(sample_supply(SupplyModel::fixed({5, 7}), rng) == std::vector<int>{5, 7});

  const SupplyModel uni = SupplyModel::uniform_integer({0}, {4});
  std::vector<long> counts(5, 0);
  for (int t = 0; t < 100000; ++t) {
    RngStream trial = rng.substream(t);
    ++counts[sample_supply(uni, trial)[0]];
  }
  for (long c : counts) {
    const double freq = c / 100000.0;
    CHECK(freq > 0.2 - 0.006);
    CHECK(freq < 0.2 + 0.006);
  }

  const SupplyModel degen = SupplyModel::uniform_integer({3}, {3});
  for (int t = 0; t < 10; ++t) CHECK(sample_supply(degen, rng)[0] == 3);

  CHECK_THROWS_AS(SupplyModel::uniform_integer({2}, {1}), std::invalid_argument);
}

TEST_CASE("supply support enumeration covers every vector with equal mass") {
  const SupplyModel uni = SupplyModel::uniform_integer({0, 1}, {2, 2});
  CHECK(uni.support_size() == 6);
  double total = 0.0;
  int count = 0;
  uni.for_each_support([&](std::span<const int> k, double p) {
    total += p;
    ++count;
    CHECK(k[0] >= 0);
    CHECK(k[0] <= 2);
    CHECK(k[1] >= 1);
    CHECK(k[1] <= 2);
  });
  CHECK(count == 6);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("market config validation") {
  MarketConfig cfg;
  cfg.players = 3;
  cfg.goods = 2;
  cfg.demand_cap = 2;
  cfg.bid_cap = 1.0;
  cfg.value_cap = 1.0;
  cfg.value_floor = 0.1;
  cfg.supply = SupplyModel::fixed({1, 2});
  CHECK_NOTHROW(cfg.validate());

  MarketConfig bad = cfg;
  bad.delta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.value_floor = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.supply = SupplyModel::fixed({0, 2});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("clean profiles run, flagged profiles are exactly the ones that throw") {
  RngStream rng(10, 0);
  MarketConfig cfg;
  cfg.players = 3;
  cfg.goods = 2;
  cfg.demand_cap = 2;
  cfg.bid_cap = 1.0;
  cfg.value_cap = 1.0;
  cfg.value_floor = 0.1;
  cfg.supply = SupplyModel::fixed({2, 2});
  for (int instance = 0; instance < 200; ++instance) {
    RngStream inst = rng.substream(instance);
    UniformBids b = testutil::random_uniform_bids(3, 2, 2, 1.0, inst);
    CHECK(validate_bid_profile(b, cfg).empty());
    CHECK_NOTHROW(run_simultaneous(b, std::vector<int>{2, 2}, inst));
    // break monotonicity somewhere and expect both the flag and the throw
    b.at(1, 0, 1) = b.at(1, 0, 0) + 0.5;
    CHECK(!validate_bid_profile(b, cfg).empty());
    CHECK_THROWS_AS(run_simultaneous(b, std::vector<int>{2, 2}, inst), std::invalid_argument);
  }
}

TEST_CASE("valuation probe validation catches contract breaks") {
  MarketConfig cfg;
  cfg.players = 1;
  cfg.goods = 1;
  cfg.demand_cap = 2;
  cfg.bid_cap = 1.0;
  cfg.value_cap = 1.0;
  cfg.value_floor = 0.2;
  cfg.supply = SupplyModel::fixed({1});

  RngStream rng(9, 0);
  const Valuation good = testutil::random_monotone_valuation(1, 2, 1.0, 0.2, rng);
  CHECK(validate_valuation(good, cfg, rng).empty());

  const Valuation overflow = Valuation::capped_combinatorial(
      1, 2, [](std::span<const int> x) { return x[0] > 0 ? 2.0 : 0.0; });
  CHECK(!validate_valuation(overflow, cfg, rng).empty());

  const Valuation below_floor = Valuation::capped_combinatorial(
      1, 2, [](std::span<const int> x) { return x[0] > 0 ? 0.05 : 0.0; });
  CHECK(!validate_valuation(below_floor, cfg, rng).empty());
}
