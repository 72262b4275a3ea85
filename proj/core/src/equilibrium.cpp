#include "poa/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poa/welfare.hpp"

namespace poa {

double Game::utility_exact(int, std::span<const int>) const {
  throw std::logic_error("Game: exact utilities not available");
}

EquilibriumReport verify_candidate_equilibrium(const Game& game, std::span<const int> candidate,
                                               EvalMode mode, long trials, RngStream& rng) {
  const int n = game.num_players();
  EquilibriumReport report;
  report.max_regret = -std::numeric_limits<double>::infinity();

  auto expected_utility = [&](int player, std::span<const int> actions, std::uint64_t tag) {
    if (mode == EvalMode::Exact) return game.utility_exact(player, actions);
    RngStream stream = rng.substream(tag);
    RunningStat stat;
    for (long t = 0; t < trials; ++t) {
      RngStream trial = stream.substream(static_cast<std::uint64_t>(t));
      stat.add(game.utility_sample(player, actions, trial));
    }
    return stat.mean();
  };

  std::vector<int> actions(candidate.begin(), candidate.end());
  for (int i = 0; i < n; ++i) {
    const double base = expected_utility(i, actions, static_cast<std::uint64_t>(i) << 32);
    const int saved = actions[i];
    for (int a = 0; a < game.num_actions(i); ++a) {
      if (a == saved) continue;
      actions[i] = a;
      const double dev =
          expected_utility(i, actions, (static_cast<std::uint64_t>(i) << 32) | (a + 1));
      const double gain = dev - base;
      if (gain > report.max_regret) {
        report.max_regret = gain;
        report.worst_player = i;
        report.worst_action = a;
      }
    }
    actions[i] = saved;
  }

  RunningStat welfare;
  RngStream wstream = rng.substream(0xCCEULL);
  const long wtrials = std::max<long>(1, trials);
  for (long t = 0; t < wtrials; ++t) {
    RngStream trial = wstream.substream(static_cast<std::uint64_t>(t));
    welfare.add(game.welfare_sample(candidate, trial));
  }
  report.welfare = {welfare.mean(), welfare.stderror()};
  report.opt = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  report.poa = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  return report;
}

LearningResult regret_learning(const Game& game, long rounds, double eta, double payoff_range,
                               RngStream& rng) {
  const int n = game.num_players();
  if (rounds < 1) throw std::invalid_argument("regret_learning: rounds >= 1 required");
  if (payoff_range <= 0.0)
    throw std::invalid_argument("regret_learning: payoff range must be positive");

  std::vector<std::vector<double>> cum_payoff(n), strategy(n), cum_strategy(n);
  std::vector<double> realized(n, 0.0);
  int max_actions = 1;
  for (int i = 0; i < n; ++i) {
    cum_payoff[i].assign(game.num_actions(i), 0.0);
    cum_strategy[i].assign(game.num_actions(i), 0.0);
    strategy[i].assign(game.num_actions(i), 1.0 / game.num_actions(i));
    max_actions = std::max(max_actions, game.num_actions(i));
  }
  if (eta <= 0.0)
    eta = std::sqrt(8.0 * std::log(static_cast<double>(max_actions)) /
                    static_cast<double>(rounds)) /
          payoff_range;

  RunningStat welfare;
  std::vector<int> actions(n, 0);
  std::vector<double> feedback;
  for (long t = 0; t < rounds; ++t) {
    RngStream round_rng = rng.substream(static_cast<std::uint64_t>(t));
    for (int i = 0; i < n; ++i) {
      // inverse-CDF draw from the current mixed strategy
      double u = round_rng.next_double();
      int pick = 0;
      for (int a = 0; a < game.num_actions(i); ++a) {
        u -= strategy[i][a];
        if (u <= 0.0) {
          pick = a;
          break;
        }
        pick = a;
      }
      actions[i] = pick;
      for (int a = 0; a < game.num_actions(i); ++a) cum_strategy[i][a] += strategy[i][a];
    }
    for (int i = 0; i < n; ++i) {
      const int played = actions[i];
      feedback.assign(game.num_actions(i), 0.0);
      for (int a = 0; a < game.num_actions(i); ++a) {
        actions[i] = a;
        RngStream eval_rng = round_rng.substream(1000 + static_cast<std::uint64_t>(i) * 64 + a);
        feedback[a] = game.utility_sample(i, actions, eval_rng);
      }
      actions[i] = played;
      realized[i] += feedback[played];
      for (int a = 0; a < game.num_actions(i); ++a) cum_payoff[i][a] += feedback[a];
      double max_term = -std::numeric_limits<double>::infinity();
      for (double c : cum_payoff[i]) max_term = std::max(max_term, eta * c);
      double z = 0.0;
      for (int a = 0; a < game.num_actions(i); ++a) z += std::exp(eta * cum_payoff[i][a] - max_term);
      for (int a = 0; a < game.num_actions(i); ++a)
        strategy[i][a] = std::exp(eta * cum_payoff[i][a] - max_term) / z;
    }
    RngStream wrng = round_rng.substream(2);
    welfare.add(game.welfare_sample(actions, wrng));
  }

  LearningResult res;
  res.rounds = rounds;
  res.avg_regret.resize(n);
  for (int i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (double c : cum_payoff[i]) best = std::max(best, c);
    res.avg_regret[i] = (best - realized[i]) / static_cast<double>(rounds);
    res.max_avg_regret = std::max(res.max_avg_regret, res.avg_regret[i]);
  }
  res.welfare = {welfare.mean(), welfare.stderror()};
  res.avg_strategy.resize(n);
  for (int i = 0; i < n; ++i) {
    res.avg_strategy[i].resize(game.num_actions(i));
    for (int a = 0; a < game.num_actions(i); ++a)
      res.avg_strategy[i][a] = cum_strategy[i][a] / static_cast<double>(rounds);
  }
  return res;
}

Estimate estimate_poa(const Estimate& opt, const Estimate& welfare) {
  if (!(welfare.value > 0.0))
    throw std::domain_error("estimate_poa: welfare estimate must be positive");
  const double ratio = opt.value / welfare.value;
  const double rel_opt = opt.value != 0.0 ? opt.se / opt.value : 0.0;
  const double rel_w = welfare.se / welfare.value;
  return {ratio, std::abs(ratio) * std::sqrt(rel_opt * rel_opt + rel_w * rel_w)};
}

Example1Report scenario_example1(int k, long trials, RngStream& rng) {
  if (k < 2) throw std::invalid_argument("scenario_example1: k >= 2 required");
  const int n = k;
  Example1Report report;
  RunningStat sw, opt;
  TieBreakOrder identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;

  std::vector<double> first(n), second(n);
  std::vector<double> marginals(static_cast<std::size_t>(n) * 2);
  std::vector<std::vector<double>> pools(n, std::vector<double>(2));
  double max_regret = -std::numeric_limits<double>::infinity();
  const long regret_draws = std::min<long>(trials, 16);

  for (long t = 0; t < trials; ++t) {
    RngStream trial = rng.substream(static_cast<std::uint64_t>(t));
    for (int i = 0; i < n; ++i) {
      const double a = trial.uniform(2.0, 3.0);
      const double b = trial.uniform(2.0, 3.0);
      first[i] = std::max(a, b);
      second[i] = std::min(a, b);
      marginals[static_cast<std::size_t>(i) * 2] = first[i];
      marginals[static_cast<std::size_t>(i) * 2 + 1] = 0.0;
      pools[i][0] = first[i];
      pools[i][1] = second[i];
    }
    const SingleGoodResult out = run_single_good(marginals, n, 2, k, identity);
    if (out.price != 0.0) ++report.price_violations;
    double welfare = 0.0;
    for (int i = 0; i < n; ++i) {
      if (out.alloc[i] != 1) ++report.alloc_violations;
      welfare += out.alloc[i] >= 1 ? first[i] + (out.alloc[i] >= 2 ? second[i] : 0.0) : 0.0;
    }
    sw.add(welfare / n);
    opt.add(opt_pooled_marginals(pools, k) / n);

    if (t < regret_draws) {
      UniformBids bids = UniformBids::zeros(n, 1, 2);
      std::vector<Valuation> vals;
      vals.reserve(n);
      for (int i = 0; i < n; ++i) {
        bids.at(i, 0, 0) = first[i];
        vals.push_back(Valuation::single_minded(1, 2, {0}, {0.0, first[i], first[i] + second[i]}));
      }
      const std::vector<int> supply{k};
      const double base = exact_utility_uniform(bids, supply, vals[0], 0);
      const double pairs[][2] = {{first[0], 2.0}, {first[0], 2.5}, {first[0], second[0]},
                                 {first[0], 3.0}, {3.0, 3.0},      {2.0, 0.0},
                                 {3.0, 0.0},      {first[0], 1.0}, {0.0, 0.0}};
      for (const auto& p : pairs) {
        if (p[1] > p[0]) continue;
        bids.at(0, 0, 0) = p[0];
        bids.at(0, 0, 1) = p[1];
        const double dev = exact_utility_uniform(bids, supply, vals[0], 0);
        max_regret = std::max(max_regret, dev - base);
        bids.at(0, 0, 0) = first[0];
        bids.at(0, 0, 1) = 0.0;
      }
    }
  }
  report.welfare_per_capita = {sw.mean(), sw.stderror()};
  report.opt_per_capita = {opt.mean(), opt.stderror()};
  report.poa = estimate_poa(report.opt_per_capita, report.welfare_per_capita);
  report.max_regret = max_regret;
  return report;
}

namespace {

// Expected win probability and payment of a player bidding `own` on one
// good of the two-good supply-uncertainty market, exactly over the uniform
// supply {0..t} and tie-breaks. `rival_ones` counts the other unit-value
// bids on this good; `halves` the half-value specialist bids.
struct GoodStats {
  double win = 0.0;
  double pay = 0.0;
};

GoodStats supply_example_good_stats(int t, int rival_ones, int halves, double own) {
  GoodStats gs;
  if (own <= 0.0) return gs;
  const int n = rival_ones + halves + 1;
  std::vector<double> marginals(n);
  for (int i = 0; i < rival_ones; ++i) marginals[i] = 1.0;
  for (int i = 0; i < halves; ++i) marginals[rival_ones + i] = 0.5;
  const int self = n - 1;
  marginals[self] = own;
  for (int k = 0; k <= t; ++k) {
    const auto dist = exact_alloc_distribution(marginals, n, 1, k, self);
    double win = 0.0;
    for (auto [units, prob] : dist) win += units * prob;
    double price = 0.0;
    if (n > k) {
      std::vector<double> sorted(marginals);
      std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end(), std::greater<>());
      price = sorted[k];
    }
    gs.win += win / (t + 1);
    gs.pay += win * price / (t + 1);
  }
  return gs;
}

double supply_example_bid_utility(int t, double bid_a, double bid_b) {
  const GoodStats a = supply_example_good_stats(t, t / 2 - 1, t, bid_a);
  const GoodStats b = supply_example_good_stats(t, t / 2, t, bid_b);
  return a.win + b.win - a.win * b.win - a.pay - b.pay;
}

}  // namespace

double supply_example_candidate_utility(int t) {
  return supply_example_bid_utility(t, 1.0, 0.0);
}

double supply_example_small_t_regret(int t) {
  if (t < 2 || t % 2 != 0)
    throw std::invalid_argument("supply_example_small_t_regret: t must be even and >= 2");
  const double base = supply_example_candidate_utility(t);
  const double grid[] = {0.0, 0.5, 1.0};
  double max_gain = -std::numeric_limits<double>::infinity();
  for (double ba : grid) {
    for (double bb : grid) {
      if (ba == 1.0 && bb == 0.0) continue;
      max_gain = std::max(max_gain, supply_example_bid_utility(t, ba, bb) - base);
    }
  }
  return max_gain;
}

SupplyExampleReport scenario_supply_counterexample(int t, long trials, long integral_trials,
                                                   RngStream& rng) {
  if (t < 2 || t % 2 != 0)
    throw std::invalid_argument("scenario_supply_counterexample: t must be even and >= 2");
  const int n = 3 * t;

  // Per-good bid column under the candidate profile: t/2 unit-value bids,
  // t half-value bids, and zeros from everyone else.
  std::vector<double> column(n, 0.0);
  std::vector<double> values(n, 0.0);
  for (int i = 0; i < t / 2; ++i) {
    column[i] = 1.0;
    values[i] = 1.0;
  }
  for (int i = 0; i < t; ++i) {
    column[t / 2 + i] = 0.5;
    values[t / 2 + i] = 0.5;
  }
  TieBreakOrder identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;

  std::vector<double> welfare_table(t + 1, 0.0);
  for (int k = 0; k <= t; ++k) {
    const SingleGoodResult out = run_single_good(column, n, 1, k, identity);
    double w = 0.0;
    for (int i = 0; i < n; ++i) w += out.alloc[i] * values[i];
    welfare_table[k] = w;
  }

  SupplyExampleReport report;
  RunningStat sw, opt, integral;
  const long pairs = (trials + 1) / 2;
  RngStream draw = rng.substream(1);
  for (long p = 0; p < pairs; ++p) {
    RngStream trial = draw.substream(static_cast<std::uint64_t>(p));
    const int ka = static_cast<int>(trial.uniform_int(0, t));
    const int kb = static_cast<int>(trial.uniform_int(0, t));
    const double sw1 = (welfare_table[ka] + welfare_table[kb]) / t;
    const double sw2 = (welfare_table[t - ka] + welfare_table[t - kb]) / t;
    sw.add(0.5 * (sw1 + sw2));
    const double o1 = closed_form_supply_example_opt(t, ka, kb) / t;
    const double o2 = closed_form_supply_example_opt(t, t - ka, t - kb) / t;
    opt.add(0.5 * (o1 + o2));
  }
  RngStream idraw = rng.substream(2);
  const long ipairs = (integral_trials + 1) / 2;
  for (long p = 0; p < ipairs; ++p) {
    RngStream trial = idraw.substream(static_cast<std::uint64_t>(p));
    const double x = static_cast<double>(trial.uniform_int(0, t)) / t;
    const double y = static_cast<double>(trial.uniform_int(0, t)) / t;
    const double g1 = std::max(x + y - 1.0, 0.0);
    const double g2 = std::max((1.0 - x) + (1.0 - y) - 1.0, 0.0);
    integral.add(0.5 * (g1 + g2));
  }

  report.welfare_over_t = {sw.mean(), sw.stderror()};
  report.opt_over_t = {opt.mean(), opt.stderror()};
  report.overlap_integral = {integral.mean(), integral.stderror()};
  report.poa = estimate_poa(report.opt_over_t, report.welfare_over_t);
  const int small_t = std::min(t, 4);
  report.candidate_utility = supply_example_candidate_utility(t <= 64 ? t : 64);
  report.small_t_max_regret = supply_example_small_t_regret(small_t);
  return report;
}

SupplyExampleReport scenario_supply_counterexample_m(int t, int goods, long trials,
                                                     RngStream& rng) {
  if (goods < 2) throw std::invalid_argument("scenario_supply_counterexample_m: goods >= 2");
  if ((2 * t) % goods != 0)
    throw std::invalid_argument("scenario_supply_counterexample_m: 2t must be divisible by m");
  const int width = 2 * t / goods;  // supply of each good is uniform on {0..width}

  SupplyExampleReport report;
  RunningStat sw, opt;
  std::vector<int> picks(goods);
  std::vector<int> supply(goods);
  const long pairs = (trials + 1) / 2;
  RngStream draw = rng.substream(1);
  for (long p = 0; p < pairs; ++p) {
    RngStream trial = draw.substream(static_cast<std::uint64_t>(p));
    std::fill(picks.begin(), picks.end(), 0);
    for (int c = 0; c < t; ++c) ++picks[trial.below(static_cast<std::uint64_t>(goods))];
    for (int j = 0; j < goods; ++j) supply[j] = static_cast<int>(trial.uniform_int(0, width));

    double pair_sw = 0.0, pair_opt = 0.0;
    for (int half = 0; half < 2; ++half) {
      double welfare = 0.0;
      long total = 0;
      for (int j = 0; j < goods; ++j) {
        const int kj = half == 0 ? supply[j] : width - supply[j];
        total += kj;
        welfare += std::min(kj, picks[j]) + 0.5 * std::max(kj - picks[j], 0);
      }
      const double optimum =
          std::min<double>(static_cast<double>(total), t) + 0.5 * std::max<long>(total - t, 0);
      pair_sw += welfare / t;
      pair_opt += optimum / t;
    }
    sw.add(0.5 * pair_sw);
    opt.add(0.5 * pair_opt);
  }

  report.welfare_over_t = {sw.mean(), sw.stderror()};
  report.opt_over_t = {opt.mean(), opt.stderror()};
  report.poa = estimate_poa(report.opt_over_t, report.welfare_over_t);
  report.overlap_integral = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  return report;
}

}  // namespace poa
