#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ecodos/attack.hpp"
#include "ecodos/game.hpp"
#include "ecodos/random.hpp"

using namespace ecodos;

namespace {

GameEnv eval_env(PayoffParams p = {10.0, 1.0, 0.0}) {
  GameEnv env;
  env.payoffs = p;
  return env;
}

auto no_mu = [](std::size_t, const PopulationState&) { return MuActivity{}; };

PopulationState random_simplex(Rng& rng, std::size_t m) {
  PopulationState x{std::vector<double>(m)};
  double total = 0.0;
  for (double& v : x.shares) total += (v = exponential(rng));
  for (double& v : x.shares) v /= total;
  return x;
}

}  // namespace

TEST(StrategySet, Invariants) {
  EXPECT_EQ(StrategySet().size(), 2u);
  EXPECT_THROW(StrategySet({0.0}), std::domain_error);
  EXPECT_THROW(StrategySet({0.5, 0.5}), std::domain_error);
  EXPECT_THROW(StrategySet({0.0, 1.5}), std::domain_error);
  EXPECT_NO_THROW(StrategySet({0.0, 0.3, 1.0}));
}

TEST(PayoffParams, Invariants) {
  EXPECT_THROW((PayoffParams{0.0, 1.0, 0.0}).validate(), std::domain_error);
  EXPECT_THROW((PayoffParams{1.0, -1.0, 0.0}).validate(), std::domain_error);
  EXPECT_THROW((PayoffParams{1.0, 1.0, -1.0}).validate(), std::domain_error);
}

TEST(PerceptionProb, Examples) {
  EXPECT_EQ(perception_prob(0.0, 50.0), 0.0);
  EXPECT_NEAR(perception_prob(1e3, 50.0), 1.0, 1e-15);
  EXPECT_NEAR(perception_prob(1e-3, 50.0), 0.9996117967960733, 1e-15);
  EXPECT_THROW(perception_prob(-1.0, 50.0), std::domain_error);
}

TEST(PerceptionProb, AgreesWithSampledDisks) {
  // fraction of sampled PPPs with a point inside the sensing disk around the window centre
  const Region r(200.0);
  for (double density : {1e-5, 1e-4, 1e-3}) {
    Rng rng(21);
    int hit = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto s = sample_ppp(density, r, rng);
      for (const auto& p : s.positions) {
        if (toroidal_distance(p, {100.0, 100.0}, r) <= 50.0) {
          ++hit;
          break;
        }
      }
    }
    EXPECT_NEAR(static_cast<double>(hit) / n, perception_prob(density, 50.0), 0.005) << density;
  }
}

TEST(StrategyPayoff, SilentEarnsKappa) {
  const GameEnv env = eval_env({10.0, 1.0, 8.0});
  EXPECT_EQ(strategy_payoff(0, PopulationState::two_strategy(0.3), env), 8.0);
}

TEST(StrategyPayoff, UnperceivedTransmissionEarnsZero) {
  const GameEnv env = eval_env({10.0, 1.0, 8.0});
  EXPECT_EQ(strategy_payoff(1, PopulationState::two_strategy(0.0), env), 0.0);
}

TEST(StrategyPayoff, GuaranteedFailureCostsNu) {
  EXPECT_EQ(transmit_payoff(1.0, 0.0, {10.0, 2.5, 0.0}), -2.5);
}

TEST(StrategyPayoff, MixedStrategiesInterpolate) {
  GameEnv env = eval_env({10.0, 1.0, 3.0});
  env.strategies = StrategySet({0.0, 0.25, 1.0});
  const PopulationState x{{0.5, 0.3, 0.2}};
  const double silent = strategy_payoff(0, x, env);
  const double sure = strategy_payoff(2, x, env);
  EXPECT_NEAR(strategy_payoff(1, x, env), 0.75 * silent + 0.25 * sure, 1e-12);
}

TEST(ReplicatorStep, EqualPayoffsLeaveStateUnchanged) {
  const PopulationState x{{0.2, 0.3, 0.5}};
  const std::vector<double> pi{1.5, 1.5, 1.5};
  EXPECT_EQ(replicator_step(x, pi, 0.1).shares, x.shares);
}

TEST(ReplicatorStep, HandArithmetic) {
  const auto next = replicator_step(PopulationState{{0.5, 0.5}}, std::vector<double>{1.0, 0.0}, 0.1);
  EXPECT_NEAR(next.shares[0], 0.525, 1e-15);
  EXPECT_NEAR(next.shares[1], 0.475, 1e-15);
}

TEST(ReplicatorStep, ExtinctionIsAbsorbing) {
  const auto next = replicator_step(PopulationState{{1.0, 0.0}}, std::vector<double>{-3.0, 100.0}, 0.1);
  EXPECT_EQ(next.shares, (std::vector<double>{1.0, 0.0}));
}

TEST(ReplicatorStep, HalvesOversizedSteps) {
  const auto next = replicator_step(PopulationState{{0.5, 0.5}}, std::vector<double>{0.0, 100.0}, 1.0);
  EXPECT_GE(next.shares[0], 0.0);
  EXPECT_NEAR(next.shares[0] + next.shares[1], 1.0, 1e-12);
  EXPECT_THROW(replicator_step(PopulationState{{0.5, 0.5}}, std::vector<double>{0.0}, 0.1), std::invalid_argument);
}

TEST(ReplicatorStep, SimplexPreservedOverRandomSteps) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(uniform01(rng) * 4);
    PopulationState x = random_simplex(rng, m);
    for (int step = 0; step < 200; ++step) {
      std::vector<double> pi(m);
      for (double& p : pi) p = 20.0 * uniform01(rng) - 10.0;
      x = replicator_step(x, pi, 0.01 + 0.5 * uniform01(rng));
      double total = 0.0;
      for (double v : x.shares) {
        ASSERT_GE(v, 0.0);
        total += v;
      }
      ASSERT_LE(std::fabs(total - 1.0), 1e-9);
    }
  }
}

TEST(ReplicatorStep, ShiftInvarianceIsBitExact) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 2 + trial % 4;
    PopulationState a = random_simplex(rng, m), b = a;
    const double shift = std::floor(200.0 * uniform01(rng)) - 100.0;
    for (int step = 0; step < 50; ++step) {
      std::vector<double> pi(m), shifted(m);
      for (std::size_t i = 0; i < m; ++i) {
        pi[i] = std::ldexp(std::floor(uniform01(rng) * 4096.0), -10);  // dyadic, so pi + shift is exact
        shifted[i] = pi[i] + shift;
      }
      a = replicator_step(a, pi, 0.1);
      b = replicator_step(b, shifted, 0.1);
      ASSERT_EQ(a.shares, b.shares);
    }
  }
}

TEST(RunDynamics, SilentMonomorphicStateIsARestPoint) {
  const GameEnv env = eval_env({10.0, 1.0, 8.0});
  const auto traj = run_dynamics(PopulationState::two_strategy(0.0), env, no_mu, 50);
  ASSERT_EQ(traj.size(), 51u);
  for (const auto& s : traj) ASSERT_EQ(s.x.shares, (std::vector<double>{1.0, 0.0}));
}

TEST(RunDynamics, RecordsMetricsAndReadsSchedule) {
  const GameEnv env = eval_env();
  std::vector<std::size_t> asked;
  auto sched = [&](std::size_t t, const PopulationState&) {
    asked.push_back(t);
    return MuActivity{t < 3 ? 5e-8 : 0.0, false};
  };
  const auto traj = run_dynamics(PopulationState::two_strategy(0.01), env, sched, 5);
  EXPECT_EQ(asked, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(traj[2].mu.density, 5e-8);
  EXPECT_EQ(traj[3].mu.density, 0.0);
  for (const auto& s : traj) {
    EXPECT_GT(s.pr_median_sinr, 0.0);
    EXPECT_GT(s.su_mean_sinr, 0.0);
    EXPECT_LE(s.fields.pr_success, 1.0);
  }
  EXPECT_THROW(run_dynamics(PopulationState::two_strategy(0.01), env, sched, 0), std::domain_error);
}

TEST(RunDynamics, DominantStrategyFixates) {
  // payoffs fixed by a schedule-independent env: margin >= 0.1 everywhere
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + trial % 3;
    PopulationState x = random_simplex(rng, m);
    for (double& v : x.shares) v = 0.01 + 0.99 * v;
    double total = 0.0;
    for (double v : x.shares) total += v;
    for (double& v : x.shares) v /= total;
    const std::size_t winner = trial % m;
    std::vector<double> base(m);
    for (double& b : base) b = uniform01(rng);
    int steps = 0;
    while (x.shares[winner] < 0.99 && steps < 1000) {
      std::vector<double> pi(m);
      double best_other = -1e9;
      for (std::size_t i = 0; i < m; ++i) {
        if (i != winner) best_other = std::max(best_other, pi[i] = base[i] + 0.3 * uniform01(rng));
      }
      pi[winner] = best_other + 0.1;
      x = replicator_step(x, pi, 0.1);
      ++steps;
    }
    EXPECT_GE(x.shares[winner], 0.99) << "trial " << trial;
  }
}

TEST(RunDynamics, KappaZeroWithInducementFixatesMutants) {
  const GameEnv env = eval_env({10.0, 1.0, 0.0});
  const AttackTemplate tmpl;
  OracleSchedule sched(AttackController(tmpl, lambda_tilde(env), true), env.su_density, env.strategies);
  const auto traj = run_dynamics(PopulationState::two_strategy(0.01), env, sched, 200);
  EXPECT_GE(traj.back().x.shares[1], 0.99);
}

TEST(RunDynamics, KappaEightRisesThenFalls) {
  const GameEnv env = eval_env({10.0, 1.0, 8.0});
  const AttackTemplate tmpl;
  OracleSchedule sched(AttackController(tmpl, lambda_tilde(env), true), env.su_density, env.strategies);
  const auto traj = run_dynamics(PopulationState::two_strategy(0.01), env, sched, 200);
  double peak = 0.0;
  for (const auto& s : traj) peak = std::max(peak, s.x.shares[1]);
  EXPECT_GT(peak, 0.01);
  EXPECT_LT(traj.back().x.shares[1], peak);
}

TEST(Classify, ReferenceOperatingPoints) {
  const GameEnv env = eval_env();
  const AttackTemplate tmpl;
  EXPECT_EQ(classify_under_attack({10.0, 1.0, 0.0}, env, tmpl).verdict, OperatingClass::Fragile);
  EXPECT_EQ(classify_under_attack({10.0, 1.0, 8.0}, env, tmpl).verdict, OperatingClass::Robust);
}

TEST(Classify, KappaAboveDeltaIsRobust) {
  // pi_transmit = q (delta s - nu (1 - s)) <= q delta < kappa on the whole (q, s) square
  for (double delta : {1.0, 5.0, 10.0}) {
    for (double nu : {0.0, 1.0, 3.0}) {
      const PayoffParams p{delta, nu, delta * 1.01};
      for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
          ASSERT_LT(transmit_payoff(i / 100.0, j / 100.0, p), p.kappa);
        }
      }
      EXPECT_EQ(classify_under_attack(p, eval_env(p), AttackTemplate{}).verdict, OperatingClass::Robust);
    }
  }
}

TEST(Classify, ZeroDriftIsBoundaryAndCountsFragile) {
  // no inducement, kappa = 0, mutants never perceive anyone: payoffs tie at zero
  GameEnv env = eval_env({10.0, 1.0, 0.0});
  env.su_density = 0.0;
  const ClassifySettings settings{PopulationState::two_strategy(0.5), 10, 0.1, 1e-3};
  const auto c = classify_operating_point({10.0, 1.0, 0.0}, env, no_mu, 1.0, settings);
  EXPECT_EQ(c.verdict, OperatingClass::Boundary);
  EXPECT_TRUE(is_fragile(c.verdict));
}

TEST(FindRestPoints, KappaZeroWithoutMusHasNeutralOrigin) {
  const auto pts = find_rest_points(eval_env({10.0, 1.0, 0.0}));
  ASSERT_FALSE(pts.empty());
  EXPECT_EQ(pts.front().x.shares[1], 0.0);
  EXPECT_EQ(pts.front().stability, Stability::Neutral);
  EXPECT_EQ(pts.back().stability, Stability::Stable);
}

TEST(FindRestPoints, PositiveKappaMakesOriginStable) {
  const auto pts = find_rest_points(eval_env({10.0, 1.0, 2.0}));
  EXPECT_EQ(pts.front().stability, Stability::Stable);
}

TEST(FindRestPoints, InducedKappaEightHasStableInteriorRoot) {
  GameEnv env = eval_env({10.0, 1.0, 8.0});
  env.mu = {1e-7 * 0.5, false};
  const auto pts = find_rest_points(env);
  std::vector<RestPoint> interior;
  for (const auto& p : pts) {
    if (p.x.shares[1] > 0.0 && p.x.shares[1] < 1.0) interior.push_back(p);
  }
  ASSERT_EQ(interior.size(), 1u);
  EXPECT_EQ(interior[0].stability, Stability::Stable);
  EXPECT_LE(std::fabs(fitness_gap(interior[0].x.shares[1], env)), 1e-8);

  // dense sign scan oracle: exactly one sign change, located at the root
  int changes = 0;
  double where = 0.0;
  double prev = fitness_gap(0.0, env);
  for (int k = 1; k <= 10000; ++k) {
    const double x = k / 10000.0;
    const double g = fitness_gap(x, env);
    if ((prev > 0) != (g > 0)) {
      ++changes;
      where = x;
    }
    prev = g;
  }
  EXPECT_EQ(changes, 1);
  EXPECT_NEAR(where, interior[0].x.shares[1], 1e-4);
}

TEST(FindRestPoints, UnstableThresholdBelowStableRoot) {
  GameEnv env = eval_env({20.0, 1.0, 10.0});
  const auto pts = find_rest_points(env);
  std::vector<Stability> tags;
  for (const auto& p : pts) {
    if (p.x.shares[1] > 0.0 && p.x.shares[1] < 1.0) {
      tags.push_back(p.stability);
      EXPECT_LE(std::fabs(fitness_gap(p.x.shares[1], env)), 1e-8);
    }
  }
  EXPECT_EQ(tags, (std::vector<Stability>{Stability::Unstable, Stability::Stable}));
}

TEST(FindRestPoints, ManyStrategiesFallBackToDynamics) {
  GameEnv env = eval_env({10.0, 1.0, 0.0});
  env.strategies = StrategySet({0.0, 0.5, 1.0});
  const auto pts = find_rest_points(env);
  ASSERT_FALSE(pts.empty());
  for (const auto& p : pts) {
    ASSERT_NO_THROW(validate_simplex(p.x));
  }
}
