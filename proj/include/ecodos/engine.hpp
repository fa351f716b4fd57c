#pragma once

// Coupled simulation loop: mean-field iteration and slotted Monte Carlo.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ecodos/attack.hpp"
#include "ecodos/channel.hpp"
#include "ecodos/game.hpp"
#include "ecodos/geometry.hpp"
#include "ecodos/random.hpp"

namespace ecodos {

enum class RunMode { MeanField, MonteCarlo };

constexpr std::string_view to_string(RunMode m) noexcept {
  return m == RunMode::MeanField ? "meanfield" : "montecarlo";
}

enum class LaunchPolicy { Decide, Always };

constexpr std::string_view to_string(LaunchPolicy p) noexcept {
  return p == LaunchPolicy::Decide ? "decide" : "always";
}

constexpr std::string_view to_string(InactiveBehavior b) noexcept {
  return b == InactiveBehavior::Silent ? "silent" : "regular_su";
}

struct SweepGrid {
  std::vector<double> delta{2.0, 5.0, 10.0, 20.0};
  std::vector<double> nu{0.5, 1.0, 2.0};
  std::vector<double> kappa{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};

  friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

struct ScenarioConfig {
  RunMode mode = RunMode::MeanField;
  std::uint64_t seed = 1;
  double region_side = 3000.0;
  std::size_t steps = 200;  ///< replicator updates
  std::size_t window = 20;  ///< slots per replicator update
  double h = 0.1;
  std::vector<double> x0{0.99, 0.01};

  ChannelParams channel;
  NodeDensities density;
  PayoffParams payoff;
  StrategySet strategies;

  // game
  double sensing_radius = 50.0;
  double mu_sensing_radius = 5000.0;
  double extinction_tol = 1e-3;
  std::size_t classify_steps = 2000;

  // attack
  double mu_access_prob = 0.5;
  std::size_t hysteresis = 5;
  InactiveBehavior inactive_behavior = InactiveBehavior::Silent;
  LaunchPolicy launch_policy = LaunchPolicy::Decide;

  // Monte Carlo
  bool resample_topology = false;

  // sweep
  SweepGrid sweep;

  void validate() const {
    channel.validate();
    payoff.validate();
    if (steps < 1) throw std::domain_error("steps must be >= 1");
    if (window < 1) throw std::domain_error("window must be >= 1");
    if (!(h > 0.0)) throw std::domain_error("h must be positive");
    if (!(region_side > 0.0)) throw std::domain_error("region_side must be positive");
    if (!(density.pt >= 0.0 && density.su >= 0.0 && density.mu >= 0.0)) {
      throw std::domain_error("densities must be >= 0");
    }
    if (x0.size() != strategies.size()) throw std::domain_error("x0 must have one share per strategy");
    validate_simplex(PopulationState{x0});
    if (!(sensing_radius > 0.0)) throw std::domain_error("sensing_radius must be positive");
    if (!(mu_sensing_radius > 0.0)) throw std::domain_error("mu_sensing_radius must be positive");
    if (!(extinction_tol > 0.0 && extinction_tol < 1.0)) throw std::domain_error("extinction_tol must lie in (0,1)");
    if (classify_steps < 1) throw std::domain_error("classify_steps must be >= 1");
    if (!(mu_access_prob >= 0.0 && mu_access_prob <= 1.0)) throw std::domain_error("mu_access_prob must lie in [0,1]");
    if (hysteresis < 1) throw std::domain_error("hysteresis must be >= 1");
    if (channel.primary.distance >= 0.5 * region_side || channel.secondary.distance >= 0.5 * region_side) {
      throw std::domain_error("link distances must be below region_side/2");
    }
  }

  GameEnv game_env() const {
    GameEnv env;
    env.channel = channel;
    env.strategies = strategies;
    env.payoffs = payoff;
    env.su_density = density.su;
    env.pt_density = density.pt;
    env.sensing_radius = sensing_radius;
    env.mu_sensing_radius = mu_sensing_radius;
    return env;
  }

  AttackTemplate attack_template() const {
    return {density.mu, mu_access_prob, hysteresis, inactive_behavior};
  }

  ClassifySettings classify_settings() const { return {PopulationState{x0}, classify_steps, h, extinction_tol}; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// One row of the metrics stream.
struct MetricsRecord {
  std::size_t t_update = 0;
  std::size_t t_slot = 0;
  std::vector<double> shares;
  double active_su_density = 0.0;
  AttackPhase mu_phase = AttackPhase::Initial;
  double pr_success = 0.0;
  double su_success = 0.0;
  double pr_sinr_db_mean = 0.0;
  double pr_sinr_db_median = 0.0;
  double su_sinr_db_mean = 0.0;
  double su_sinr_db_median = 0.0;
  std::vector<double> payoffs;
  /// Payoff samples per strategy in the window (Monte Carlo only; not exported).
  std::vector<std::size_t> payoff_samples;
};

struct RunResult {
  std::vector<MetricsRecord> metrics;
  std::vector<PhaseEvent> events;
  double lambda_tilde = 0.0;
  bool launched = false;
};

inline bool launch_decision(const ScenarioConfig& cfg, const DensityEstimates& est) {
  if (cfg.launch_policy == LaunchPolicy::Always) return true;
  return decide_launch(est, cfg.payoff, cfg.game_env(), cfg.attack_template(), cfg.classify_settings());
}

/// Deterministic mean-field iteration: one record per replicator update plus the terminal state.
inline RunResult run_meanfield(const ScenarioConfig& cfg) {
  cfg.validate();
  const GameEnv env = cfg.game_env();
  RunResult result;
  result.lambda_tilde = lambda_tilde(env);
  result.launched = launch_decision(cfg, {cfg.density.pt, cfg.density.su, cfg.density.mu});
  OracleSchedule schedule(AttackController(cfg.attack_template(), result.lambda_tilde, result.launched),
                          cfg.density.su, cfg.strategies, cfg.window);
  AttackPhase phase_now = AttackPhase::Initial;
  auto tracking = [&](std::size_t t, const PopulationState& x) {
    const MuActivity mu = schedule(t, x);
    phase_now = schedule.controller().state().phase;
    return mu;
  };
  PopulationState x{cfg.x0};
  result.metrics.reserve(cfg.steps + 1);
  for (std::size_t t = 0; t <= cfg.steps; ++t) {
    const MuActivity mu = tracking(t, x);
    const DynamicsStep step = observe_state(t, x, env, mu, true);
    MetricsRecord r;
    r.t_update = t;
    r.t_slot = t * cfg.window;
    r.shares = x.shares;
    r.active_su_density = step.fields.active_su_density;
    r.mu_phase = phase_now;
    r.pr_success = step.fields.pr_success;
    r.su_success = step.fields.su_success;
    r.pr_sinr_db_mean = to_db(step.pr_mean_sinr);
    r.pr_sinr_db_median = to_db(step.pr_median_sinr);
    r.su_sinr_db_mean = to_db(step.su_mean_sinr);
    r.su_sinr_db_median = to_db(step.su_median_sinr);
    r.payoffs = step.payoffs;
    result.metrics.push_back(std::move(r));
    if (t == cfg.steps) break;
    x = replicator_step(x, step.payoffs, cfg.h);
  }
  result.events = schedule.controller().events();
  return result;
}

namespace detail {

struct SampleStats {
  std::vector<double> values;
  std::size_t successes = 0;

  void add(double sinr_value, double threshold) {
    values.push_back(sinr_value);
    if (sinr_value >= threshold) ++successes;
  }
  double success_rate() const {
    return values.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(successes) / static_cast<double>(values.size());
  }
  double mean_db() const {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    return to_db(std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()));
  }
  double median_db() {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    double med = *mid;
    if (n % 2 == 0) med = 0.5 * (med + *std::max_element(values.begin(), mid));
    return to_db(med);
  }
};

struct ActiveTx {
  Point position;
  double power;
  std::size_t su_index;  // SIZE_MAX for PTs and MUs
  enum Kind : std::uint8_t { Pt, Su, Mu, DisguisedMu } kind;
};

}  // namespace detail

/// Slotted Monte Carlo over one sampled topology (or one per slot when resampling).
inline RunResult run_montecarlo(const ScenarioConfig& cfg) {
  cfg.validate();
  const Region region(cfg.region_side);
  const auto& ch = cfg.channel;
  const std::size_t m = cfg.strategies.size();
  const double rs_sq = cfg.sensing_radius * cfg.sensing_radius;
  const double rmu_sq = cfg.mu_sensing_radius * cfg.mu_sensing_radius;

  World world = sample_world(region, cfg.density, ch.primary.distance, ch.secondary.distance, cfg.seed);
  if (world.sus.empty()) throw std::runtime_error("degenerate population: no SUs sampled");
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  RunResult result;
  const GameEnv env = cfg.game_env();
  result.lambda_tilde = lambda_tilde(env);
  result.launched = launch_decision(cfg, observe(world));
  AttackController controller(cfg.attack_template(), result.lambda_tilde, result.launched);

  PopulationState x{cfg.x0};
  std::vector<std::size_t> su_strategy(world.sus.size());
  std::vector<std::size_t> mu_strategy(world.mus.size());
  std::vector<detail::ActiveTx> active;
  double prev_estimate = 0.0;
  std::uint64_t slot = 0;

  for (std::size_t t = 0; t <= cfg.steps; ++t) {
    controller.advance(t, static_cast<std::size_t>(slot), prev_estimate, access_rate(x, cfg.strategies));
    const AttackState& attack = controller.state();

    for (auto& s : su_strategy) s = categorical(rng, x.shares);
    for (auto& s : mu_strategy) s = categorical(rng, x.shares);

    std::vector<double> payoff_sum(m, 0.0);
    std::vector<std::size_t> payoff_count(m, 0);
    detail::SampleStats pr_stats, su_stats;
    double active_count_sum = 0.0;

    for (std::size_t k = 0; k < cfg.window; ++k, ++slot) {
      if (cfg.resample_topology && slot > 0) {
        world = sample_world(region, cfg.density, ch.primary.distance, ch.secondary.distance,
                             cfg.seed + 0x632BE59BD9B4E019ULL * slot);
        if (world.sus.empty()) throw std::runtime_error("degenerate population: no SUs sampled");
        su_strategy.resize(world.sus.size());
        for (auto& s : su_strategy) s = categorical(rng, x.shares);
        mu_strategy.resize(world.mus.size());
        for (auto& s : mu_strategy) s = categorical(rng, x.shares);
      }

      active.clear();
      for (const Point& p : world.pts.positions) active.push_back({p, ch.primary.power, SIZE_MAX, detail::ActiveTx::Pt});
      std::size_t active_sus = 0;
      for (std::size_t i = 0; i < world.sus.size(); ++i) {
        if (bernoulli(rng, cfg.strategies[su_strategy[i]])) {
          active.push_back({world.sus.positions[i], ch.secondary.power, i, detail::ActiveTx::Su});
          ++active_sus;
        }
      }
      const bool regular = attack.phase == AttackPhase::Inactive && cfg.inactive_behavior == InactiveBehavior::RegularSu;
      if (!world.mus.empty()) {
        for (std::size_t i = 0; i < world.mus.size(); ++i) {
          const bool on = regular ? bernoulli(rng, cfg.strategies[mu_strategy[i]]) : mu_action(attack, rng);
          if (on) {
            active.push_back({world.mus.positions[i], ch.mu_power, SIZE_MAX,
                              regular ? detail::ActiveTx::DisguisedMu : detail::ActiveTx::Mu});
          }
        }
      } else {
        // sub-unity expected MU count: realize the active MU field afresh each slot
        const MuActivity mu = controller.activity(access_rate(x, cfg.strategies));
        if (mu.density > 0.0) {
          const NodeSet field = sample_ppp(mu.density, region, rng, NodeClass::Malicious);
          for (const Point& p : field.positions) {
            active.push_back({p, ch.mu_power, SIZE_MAX, mu.disguised ? detail::ActiveTx::DisguisedMu : detail::ActiveTx::Mu});
          }
        }
      }
      active_count_sum += static_cast<double>(active_sus);

      // primary receivers
      for (std::size_t j = 0; j < world.prs.size(); ++j) {
        const Point rx = world.prs.positions[j];
        double interference = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
          const auto& tx = active[a];
          // PTs lead the active list in world order, so entry j is this PR's own PT
          if (tx.kind == detail::ActiveTx::Pt && (!ch.pt_interference_at_pr || a == j)) continue;
          interference += tx.power * sample_fading(rng) *
                          detail::clamped_gain(toroidal_distance_sq(rx, tx.position, region), ch.alpha, ch.d_min);
        }
        const double d0 = toroidal_distance_sq(rx, world.pts.positions[j], region);
        const double signal = ch.primary.power * sample_fading(rng) * detail::clamped_gain(d0, ch.alpha, 0.0);
        pr_stats.add(signal / (ch.noise + interference), ch.primary.sinr_threshold);
      }

      // transmitting SUs score their own link
      for (const auto& me : active) {
        if (me.kind != detail::ActiveTx::Su) continue;
        const std::size_t i = me.su_index;
        const Point rx = world.su_receivers.positions[i];
        double interference = 0.0;
        bool perceived = false;
        for (const auto& tx : active) {
          if (tx.kind == detail::ActiveTx::Su && tx.su_index == i) continue;
          if (tx.kind == detail::ActiveTx::Pt && !ch.pt_interference_at_su) continue;
          interference += tx.power * sample_fading(rng) *
                          detail::clamped_gain(toroidal_distance_sq(rx, tx.position, region), ch.alpha, ch.d_min);
          if (!perceived && tx.kind != detail::ActiveTx::Pt) {
            const double r2 = tx.kind == detail::ActiveTx::Mu ? rmu_sq : rs_sq;
            perceived = toroidal_distance_sq(me.position, tx.position, region) <= r2;
          }
        }
        const double d0 = toroidal_distance_sq(rx, me.position, region);
        const double gamma =
            ch.secondary.power * sample_fading(rng) * detail::clamped_gain(d0, ch.alpha, 0.0) / (ch.noise + interference);
        su_stats.add(gamma, ch.secondary.sinr_threshold);
        const double payoff =
            !perceived ? 0.0 : gamma >= ch.secondary.sinr_threshold ? cfg.payoff.delta : -cfg.payoff.nu;
        payoff_sum[su_strategy[i]] += payoff;
        ++payoff_count[su_strategy[i]];
      }
      // a silent slot pays kappa
      std::vector<bool> transmitted(world.sus.size(), false);
      for (const auto& a : active) {
        if (a.kind == detail::ActiveTx::Su) transmitted[a.su_index] = true;
      }
      for (std::size_t i = 0; i < world.sus.size(); ++i) {
        if (transmitted[i]) continue;
        payoff_sum[su_strategy[i]] += cfg.payoff.kappa;
        ++payoff_count[su_strategy[i]];
      }
    }

    const double estimate = active_count_sum / static_cast<double>(cfg.window) / region.area();
    double sample_mean = 0.0;
    std::size_t sample_total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      sample_mean += payoff_sum[i];
      sample_total += payoff_count[i];
    }
    sample_mean /= static_cast<double>(sample_total);
    std::vector<double> payoffs(m);
    for (std::size_t i = 0; i < m; ++i) {
      payoffs[i] = payoff_count[i] > 0 ? payoff_sum[i] / static_cast<double>(payoff_count[i]) : sample_mean;
    }

    MetricsRecord r;
    r.t_update = t;
    r.t_slot = static_cast<std::size_t>(slot) - cfg.window;
    r.shares = x.shares;
    r.active_su_density = estimate;
    r.mu_phase = attack.phase;
    r.pr_success = pr_stats.success_rate();
    r.su_success = su_stats.success_rate();
    r.pr_sinr_db_mean = pr_stats.mean_db();
    r.pr_sinr_db_median = pr_stats.median_db();
    r.su_sinr_db_mean = su_stats.mean_db();
    r.su_sinr_db_median = su_stats.median_db();
    r.payoffs = payoffs;
    r.payoff_samples = payoff_count;
    for (std::size_t i = 0; i < m; ++i) {
      if (payoff_count[i] == 0) r.payoffs[i] = std::numeric_limits<double>::quiet_NaN();
    }
    result.metrics.push_back(std::move(r));

    prev_estimate = estimate;
    if (t == cfg.steps) break;
    x = replicator_step(x, payoffs, cfg.h);
  }
  result.events = controller.events();
  return result;
}

inline RunResult run(const ScenarioConfig& cfg) {
  return cfg.mode == RunMode::MeanField ? run_meanfield(cfg) : run_montecarlo(cfg);
}

struct RegionCell {
  double delta = 0.0;
  double nu = 0.0;
  double kappa = 0.0;
  Classification result;
  std::string error;  ///< nonempty when the cell failed
};

/// Classifies every (delta, nu, kappa) cell in grid order; cells run on `threads` workers.
inline std::vector<RegionCell> sweep_region(const SweepGrid& grid, const ScenarioConfig& base, unsigned threads = 1) {
  base.validate();
  if (grid.delta.empty() || grid.nu.empty() || grid.kappa.empty()) {
    throw std::domain_error("sweep grid must be nonempty on every axis");
  }
  std::vector<RegionCell> cells;
  for (double d : grid.delta) {
    for (double n : grid.nu) {
      for (double k : grid.kappa) cells.push_back({d, n, k, {}, {}});
    }
  }
  const GameEnv env = base.game_env();
  const AttackTemplate tmpl = base.attack_template();
  const ClassifySettings settings = base.classify_settings();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& c = cells[i];
      try {
        c.result = classify_under_attack(PayoffParams{c.delta, c.nu, c.kappa}, env, tmpl, settings);
      } catch (const std::exception& e) {
        c.error = e.what();
        c.result.verdict = OperatingClass::Boundary;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return cells;
}

}  // namespace ecodos
