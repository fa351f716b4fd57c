#pragma once

// Evolutionary access game: strategies are access probabilities, payoffs
// come from the Poisson-field success probabilities, and shares evolve by
// replicator dynamics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "ecodos/channel.hpp"

namespace ecodos {

/// Access probabilities p_1 < ... < p_M, M >= 2.
class StrategySet {
 public:
  StrategySet() : probs_{0.0, 1.0} {}
  explicit StrategySet(std::vector<double> access_probs) : probs_(std::move(access_probs)) {
    if (probs_.size() < 2) throw std::domain_error("strategy set needs at least two strategies");
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) throw std::domain_error("access probabilities must lie in [0,1]");
      if (i > 0 && !(probs_[i] > probs_[i - 1])) {
        throw std::domain_error("access probabilities must be strictly increasing");
      }
    }
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_.at(i); }
  std::span<const double> probs() const noexcept { return probs_; }

  friend bool operator==(const StrategySet&, const StrategySet&) = default;

 private:
  std::vector<double> probs_;
};

struct PayoffParams {
  double delta = 10.0;  ///< reward for a successful transmission alongside a perceived accomplice
  double nu = 1.0;      ///< cost of an unsuccessful one
  double kappa = 0.0;   ///< reward for staying silent

  void validate() const {
    if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
    if (!(nu >= 0.0)) throw std::domain_error("nu must be >= 0");
    if (!(kappa >= 0.0)) throw std::domain_error("kappa must be >= 0");
  }

  friend bool operator==(const PayoffParams&, const PayoffParams&) = default;
};

/// Strategy shares of the SU population.
struct PopulationState {
  std::vector<double> shares;

  std::size_t size() const noexcept { return shares.size(); }
  double operator[](std::size_t i) const { return shares.at(i); }

  /// Two-strategy state with the given share on the transmitting strategy.
  static PopulationState two_strategy(double mutant_share) { return {{1.0 - mutant_share, mutant_share}}; }
};

constexpr double kSimplexTolerance = 1e-9;

inline void validate_simplex(const PopulationState& x) {
  double total = 0.0;
  for (double v : x.shares) {
    if (!(v >= 0.0)) throw std::domain_error("population shares must be nonnegative");
    total += v;
  }
  if (std::fabs(total - 1.0) > kSimplexTolerance) throw std::domain_error("population shares must sum to 1");
}

/// Transmit-weighted share: fraction of SUs transmitting in a typical slot.
inline double access_rate(const PopulationState& x, const StrategySet& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x.shares[i] * s[i];
  return acc;
}

/// Share held by strategies with positive access probability.
inline double mutant_share(const PopulationState& x, const StrategySet& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (s[i] > 0.0) acc += x.shares[i];
  }
  return acc;
}

/// How malicious users currently appear to the secondary network.
struct MuActivity {
  double density = 0.0;    ///< active MUs per m^2
  bool disguised = false;  ///< perceived like an SU (sensing radius) instead of the MU reach
};

struct GameEnv {
  ChannelParams channel;
  StrategySet strategies;
  PayoffParams payoffs;
  double su_density = 1e-3;
  double pt_density = 1e-5;
  MuActivity mu;
  double sensing_radius = 50.0;
  double mu_sensing_radius = 5000.0;

  void validate() const {
    channel.validate();
    payoffs.validate();
    if (!(su_density >= 0.0) || !(pt_density >= 0.0) || !(mu.density >= 0.0)) {
      throw std::domain_error("densities must be >= 0");
    }
    if (!(sensing_radius > 0.0)) throw std::domain_error("sensing radius must be positive");
    if (!(mu_sensing_radius > 0.0)) throw std::domain_error("MU sensing radius must be positive");
  }
};

/// P[at least one point of a PPP of `density` within `radius`].
inline double perception_prob(double density, double radius) {
  if (!(density >= 0.0)) throw std::domain_error("perception_prob: density must be >= 0");
  return -std::expm1(-density * std::numbers::pi * radius * radius);
}

/// Mean-field state of the interference and perception fields at a population state.
struct FieldSnapshot {
  double active_su_density = 0.0;
  double perception = 0.0;  ///< q: P[a transmitting SU perceives an accomplice]
  double su_success = 1.0;  ///< s: P[SU link SINR >= eta_SU]
  double pr_success = 1.0;
  std::vector<InterfererField> su_fields;
  std::vector<InterfererField> pr_fields;
};

inline FieldSnapshot evaluate_fields(const PopulationState& x, const GameEnv& env) {
  const auto& ch = env.channel;
  FieldSnapshot f;
  f.active_su_density = env.su_density * access_rate(x, env.strategies);

  const double mu_radius = env.mu.disguised ? env.sensing_radius : env.mu_sensing_radius;
  const double q_su = perception_prob(f.active_su_density, env.sensing_radius);
  const double q_mu = perception_prob(env.mu.density, mu_radius);
  f.perception = 1.0 - (1.0 - q_su) * (1.0 - q_mu);

  const InterfererField su_field{f.active_su_density, ch.secondary.power};
  const InterfererField mu_field{env.mu.density, ch.mu_power};
  const InterfererField pt_field{env.pt_density, ch.primary.power};
  f.su_fields = {su_field, mu_field};
  if (ch.pt_interference_at_su) f.su_fields.push_back(pt_field);
  f.pr_fields = {su_field, mu_field};
  if (ch.pt_interference_at_pr) f.pr_fields.push_back(pt_field);

  f.su_success = success_prob(ch.secondary.distance, ch.secondary.power, ch.secondary.sinr_threshold, f.su_fields, ch);
  f.pr_success = success_prob(ch.primary.distance, ch.primary.power, ch.primary.sinr_threshold, f.pr_fields, ch);
  return f;
}

/// Expected payoff of a sure transmission given perception q and success s.
inline double transmit_payoff(double perception, double success, const PayoffParams& p) {
  return perception * (p.delta * success - p.nu * (1.0 - success));
}

/// Mixed strategies interpolate linearly between silence and sure transmission.
inline double strategy_payoff(double access_prob, const FieldSnapshot& f, const PayoffParams& p) {
  return (1.0 - access_prob) * p.kappa + access_prob * transmit_payoff(f.perception, f.su_success, p);
}

inline double strategy_payoff(std::size_t i, const PopulationState& x, const GameEnv& env) {
  return strategy_payoff(env.strategies[i], evaluate_fields(x, env), env.payoffs);
}

inline std::vector<double> strategy_payoffs(const FieldSnapshot& f, const GameEnv& env) {
  std::vector<double> out(env.strategies.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = strategy_payoff(env.strategies[i], f, env.payoffs);
  return out;
}

/// One Euler step of x_i' = x_i + h x_i (pi_i - pi_bar), renormalized to the simplex.
///
/// The fitness gap is accumulated as sum_j x_j (pi_i - pi_j), so adding the
/// same constant to every payoff yields the same bits whenever that addition
/// is exact. When a step would push a share negative, h is halved (at most 40
/// times).
inline PopulationState replicator_step(const PopulationState& x, std::span<const double> payoffs, double h) {
  if (payoffs.size() != x.size()) throw std::invalid_argument("replicator_step: payoff/share size mismatch");
  if (!(h > 0.0)) throw std::domain_error("replicator_step: step size must be positive");
  const std::size_t m = x.size();
  std::vector<double> gap(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) gap[i] += x.shares[j] * (payoffs[i] - payoffs[j]);
  }
  PopulationState next{std::vector<double>(m)};
  double step = h;
  for (int halvings = 0;; ++halvings) {
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      next.shares[i] = x.shares[i] + step * x.shares[i] * gap[i];
      if (next.shares[i] < 0.0) ok = false;
    }
    if (ok) break;
    if (halvings == 40) throw std::runtime_error("replicator_step: step size cannot keep shares nonnegative");
    step *= 0.5;
  }
  const double total = std::accumulate(next.shares.begin(), next.shares.end(), 0.0);
  for (double& v : next.shares) v /= total;
  return next;
}

/// Everything observed at one replicator update.
struct DynamicsStep {
  std::size_t t = 0;
  PopulationState x;
  std::vector<double> payoffs;
  MuActivity mu;
  FieldSnapshot fields;
  double pr_median_sinr = 0.0;
  double su_median_sinr = 0.0;
  double pr_mean_sinr = 0.0;
  double su_mean_sinr = 0.0;
};

struct DynamicsOptions {
  double h = 0.1;
  bool sinr_metrics = true;
};

inline void fill_sinr_metrics(DynamicsStep& step, const GameEnv& env) {
  const auto& ch = env.channel;
  const auto& f = step.fields;
  step.pr_median_sinr = median_sinr(ch.primary.distance, ch.primary.power, f.pr_fields, ch);
  step.su_median_sinr = median_sinr(ch.secondary.distance, ch.secondary.power, f.su_fields, ch);
  step.pr_mean_sinr = mean_sinr(ch.primary.distance, ch.primary.power, f.pr_fields, ch);
  step.su_mean_sinr = mean_sinr(ch.secondary.distance, ch.secondary.power, f.su_fields, ch);
}

inline DynamicsStep observe_state(std::size_t t, const PopulationState& x, const GameEnv& env, MuActivity mu,
                                  bool sinr_metrics) {
  GameEnv local = env;
  local.mu = mu;
  DynamicsStep step;
  step.t = t;
  step.x = x;
  step.mu = mu;
  step.fields = evaluate_fields(x, local);
  step.payoffs = strategy_payoffs(step.fields, local);
  if (sinr_metrics) fill_sinr_metrics(step, local);
  return step;
}

/// Iterates payoffs and replicator updates for `steps` updates.
///
/// `mu_schedule(t, x)` returns the MU activity in force at update t; it may be
/// stateful (an attack controller). The result holds steps + 1 entries: one
/// per update plus the terminal state, which is observed under the activity
/// the schedule returns for t = steps.
template <class Schedule>
std::vector<DynamicsStep> run_dynamics(PopulationState x0, const GameEnv& env, Schedule&& mu_schedule,
                                       std::size_t steps, DynamicsOptions opts = {}) {
  if (steps < 1) throw std::domain_error("run_dynamics: need at least one step");
  validate_simplex(x0);
  if (x0.size() != env.strategies.size()) throw std::invalid_argument("run_dynamics: x0 size != strategy count");
  std::vector<DynamicsStep> out;
  out.reserve(steps + 1);
  PopulationState x = std::move(x0);
  for (std::size_t t = 0; t <= steps; ++t) {
    const MuActivity mu = mu_schedule(t, std::as_const(x));
    out.push_back(observe_state(t, x, env, mu, opts.sinr_metrics));
    if (t == steps) break;
    x = replicator_step(x, out.back().payoffs, opts.h);
  }
  return out;
}

enum class OperatingClass { Robust, Fragile, Boundary };

constexpr std::string_view to_string(OperatingClass c) noexcept {
  switch (c) {
    case OperatingClass::Robust: return "robust";
    case OperatingClass::Fragile: return "fragile";
    case OperatingClass::Boundary: return "boundary";
  }
  return "?";
}

/// Boundary points are counted with the fragile ones.
constexpr bool is_fragile(OperatingClass c) noexcept { return c != OperatingClass::Robust; }

struct ClassifySettings {
  PopulationState x0 = PopulationState::two_strategy(0.01);
  std::size_t max_steps = 2000;
  double h = 0.1;
  double extinction_tol = 1e-3;
};

struct Classification {
  OperatingClass verdict = OperatingClass::Boundary;
  double terminal_mutant_share = 0.0;
  double terminal_active_density = 0.0;
  std::size_t steps = 0;
};

/// Runs the dynamics under `attack_schedule` and classifies the terminal state.
///
/// Fragile once the active SU density exceeds `lambda_tilde` at the end;
/// Robust once the mutant share is below the extinction tolerance. Otherwise
/// the sign of the mutant fitness gap decides, and a zero gap is Boundary.
template <class Schedule>
Classification classify_operating_point(const PayoffParams& payoffs, const GameEnv& env, Schedule attack_schedule,
                                        double lambda_tilde, const ClassifySettings& settings = {}) {
  GameEnv local = env;
  local.payoffs = payoffs;
  local.validate();
  const auto traj = run_dynamics(settings.x0, local, attack_schedule, settings.max_steps,
                                 DynamicsOptions{settings.h, false});
  const DynamicsStep& last = traj.back();
  Classification c;
  c.steps = settings.max_steps;
  c.terminal_mutant_share = mutant_share(last.x, local.strategies);
  c.terminal_active_density = last.fields.active_su_density;
  if (c.terminal_active_density > lambda_tilde) {
    c.verdict = OperatingClass::Fragile;
  } else if (c.terminal_mutant_share < settings.extinction_tol) {
    c.verdict = OperatingClass::Robust;
  } else {
    double mutant_payoff = 0.0;
    double mean_payoff = 0.0;
    for (std::size_t i = 0; i < last.x.size(); ++i) {
      mean_payoff += last.x.shares[i] * last.payoffs[i];
      if (local.strategies[i] > 0.0) mutant_payoff += last.x.shares[i] * last.payoffs[i];
    }
    mutant_payoff /= c.terminal_mutant_share;
    const double drift = mutant_payoff - mean_payoff;
    c.verdict = drift > 0.0 ? OperatingClass::Fragile : drift < 0.0 ? OperatingClass::Robust : OperatingClass::Boundary;
  }
  return c;
}

enum class Stability { Stable, Unstable, Neutral };

constexpr std::string_view to_string(Stability s) noexcept {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Neutral: return "neutral";
  }
  return "?";
}

struct RestPoint {
  PopulationState x;
  Stability stability = Stability::Neutral;
};

/// Fitness gap pi_transmit - pi_silent at mutant share x (two strategies).
inline double fitness_gap(double mutant, const GameEnv& env) {
  const auto x = PopulationState::two_strategy(mutant);
  const auto f = evaluate_fields(x, env);
  return strategy_payoff(env.strategies[1], f, env.payoffs) - strategy_payoff(env.strategies[0], f, env.payoffs);
}

/// Rest points of the replicator dynamics in `env` (MU activity held fixed).
///
/// Two strategies: roots of the fitness gap g on (0,1) by sign scan and
/// bisection, plus both endpoints, tagged by the sign of g around them.
/// More strategies: distinct end states of the dynamics from a set of starts.
inline std::vector<RestPoint> find_rest_points(const GameEnv& env, std::size_t scan_points = 1000) {
  std::vector<RestPoint> out;
  constexpr double kZero = 1e-12;
  if (env.strategies.size() == 2) {
    auto g = [&](double m) { return fitness_gap(m, env); };
    auto tag = [&](double left, double right) {
      // sign of g just left/right of a point; stable when flow converges on it
      const bool in_left = left > kZero, in_right = right < -kZero;
      if (in_left && in_right) return Stability::Stable;
      if (left < -kZero && right > kZero) return Stability::Unstable;
      return Stability::Neutral;
    };
    const double g0 = g(0.0);
    out.push_back({PopulationState::two_strategy(0.0),
                   g0 < -kZero ? Stability::Stable : g0 > kZero ? Stability::Unstable : Stability::Neutral});
    double prev_x = 0.0;
    double prev_g = g0;
    for (std::size_t k = 1; k <= scan_points; ++k) {
      const double cur_x = static_cast<double>(k) / static_cast<double>(scan_points);
      const double cur_g = g(cur_x);
      if (k < scan_points && std::fabs(cur_g) <= kZero) {
        out.push_back({PopulationState::two_strategy(cur_x), tag(prev_g, g(cur_x + 0.5 / scan_points))});
      } else if ((prev_g > kZero && cur_g < -kZero) || (prev_g < -kZero && cur_g > kZero)) {
        double lo = prev_x, hi = cur_x;
        const bool falling = prev_g > 0.0;
        while (hi - lo > 1e-12) {
          const double mid = 0.5 * (lo + hi);
          ((g(mid) > 0.0) == falling ? lo : hi) = mid;
        }
        const double root = 0.5 * (lo + hi);
        out.push_back({PopulationState::two_strategy(root), falling ? Stability::Stable : Stability::Unstable});
      }
      prev_x = cur_x;
      prev_g = cur_g;
    }
    const double g1 = g(1.0);
    out.push_back({PopulationState::two_strategy(1.0),
                   g1 > kZero ? Stability::Stable : g1 < -kZero ? Stability::Unstable : Stability::Neutral});
    return out;
  }

  const std::size_t m = env.strategies.size();
  const MuActivity fixed_mu = env.mu;
  auto hold = [fixed_mu](std::size_t, const PopulationState&) { return fixed_mu; };
  std::vector<PopulationState> starts;
  for (std::size_t i = 0; i < m; ++i) {
    PopulationState s{std::vector<double>(m, 0.1 / static_cast<double>(m - 1))};
    s.shares[i] = 0.9;
    starts.push_back(s);
  }
  starts.push_back(PopulationState{std::vector<double>(m, 1.0 / static_cast<double>(m))});
  for (const auto& s : starts) {
    const auto traj = run_dynamics(s, env, hold, 5000, DynamicsOptions{0.1, false});
    const auto& end = traj.back().x;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const RestPoint& r) {
      double d = 0.0;
      for (std::size_t i = 0; i < m; ++i) d = std::max(d, std::fabs(r.x.shares[i] - end.shares[i]));
      return d < 1e-6;
    });
    if (!seen) out.push_back({end, Stability::Stable});
  }
  return out;
}

}  // namespace ecodos
