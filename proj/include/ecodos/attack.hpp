#pragma once

// Malicious-user controller: estimate, decide, induce, withdraw.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecodos/game.hpp"
#include "ecodos/geometry.hpp"
#include "ecodos/random.hpp"

namespace ecodos {

enum class AttackPhase { Initial, Inducing, Inactive, Aborted };

constexpr std::string_view to_string(AttackPhase p) noexcept {
  switch (p) {
    case AttackPhase::Initial: return "initial";
    case AttackPhase::Inducing: return "inducing";
    case AttackPhase::Inactive: return "inactive";
    case AttackPhase::Aborted: return "aborted";
  }
  return "?";
}

constexpr bool is_terminal(AttackPhase p) noexcept {
  return p == AttackPhase::Inactive || p == AttackPhase::Aborted;
}

struct DensityEstimates {
  double pt = 0.0;
  double su = 0.0;
  double mu = 0.0;
};

struct AttackState {
  AttackPhase phase = AttackPhase::Initial;
  DensityEstimates estimates;
  double observed_mutant_density = 0.0;
  double mu_access_prob = 0.5;
  std::size_t slots_in_phase = 0;
  std::size_t consecutive_above = 0;  ///< slots in a row above the withdrawal threshold
};

struct PhaseThresholds {
  double lambda_tilde = 0.0;   ///< active SU density at which the PR outage constraint breaks
  std::size_t hysteresis = 5;  ///< consecutive above-threshold slots before withdrawing
};

struct SlotObservation {
  std::optional<bool> launch;  ///< launch decision, consumed in the initial phase
  double mutant_density = 0.0;
};

/// Per-class density estimates count / area.
inline DensityEstimates observe(std::size_t pt_count, std::size_t su_count, std::size_t mu_count, double area) {
  if (!(area > 0.0)) throw std::domain_error("observe: window area must be positive");
  return {static_cast<double>(pt_count) / area, static_cast<double>(su_count) / area,
          static_cast<double>(mu_count) / area};
}

inline DensityEstimates observe(const World& world) {
  return observe(world.pts.size(), world.sus.size(), world.mus.size(), world.region.area());
}

/// Advances the phase machine by one slot.
inline AttackState step_phase(AttackState state, const SlotObservation& obs, const PhaseThresholds& thresholds) {
  const AttackPhase before = state.phase;
  switch (state.phase) {
    case AttackPhase::Initial:
      if (obs.launch) state.phase = *obs.launch ? AttackPhase::Inducing : AttackPhase::Aborted;
      break;
    case AttackPhase::Inducing:
      state.observed_mutant_density = obs.mutant_density;
      state.consecutive_above = obs.mutant_density > thresholds.lambda_tilde ? state.consecutive_above + 1 : 0;
      if (state.consecutive_above >= thresholds.hysteresis) state.phase = AttackPhase::Inactive;
      break;
    case AttackPhase::Inactive:
    case AttackPhase::Aborted:
      throw std::logic_error("step_phase: no transition out of terminal phase " + std::string(to_string(state.phase)));
  }
  state.slots_in_phase = state.phase == before ? state.slots_in_phase + 1 : 0;
  return state;
}

/// Whether one MU transmits this slot. Only the inducing phase transmits.
inline bool mu_action(const AttackState& state, Rng& rng) {
  return state.phase == AttackPhase::Inducing && bernoulli(rng, state.mu_access_prob);
}

enum class InactiveBehavior { Silent, RegularSu };

/// What the MUs do once they have induced enough mutants.
struct AttackTemplate {
  double mu_density = 1e-7;
  double mu_access_prob = 0.5;
  std::size_t hysteresis = 5;
  InactiveBehavior inactive = InactiveBehavior::Silent;
};

struct PhaseEvent {
  std::size_t t_update = 0;
  std::size_t t_slot = 0;
  AttackPhase from = AttackPhase::Initial;
  AttackPhase to = AttackPhase::Initial;
  double trigger = 0.0;
};

/// The colluding MUs as one controller, with its phase-transition log.
class AttackController {
 public:
  AttackController(AttackTemplate tmpl, double lambda_tilde, bool launch)
      : tmpl_(tmpl), thresholds_{lambda_tilde, tmpl.hysteresis}, launch_(launch) {
    state_.mu_access_prob = tmpl.mu_access_prob;
  }

  /// Consumes the observation for update t and returns the MU activity in force for it.
  /// Update 0 carries the launch decision; later updates the observed active SU density.
  /// `regular_access` is the access rate MUs adopt when inactive as regular SUs.
  MuActivity advance(std::size_t t, std::size_t t_slot, double observed_mutant_density, double regular_access = 0.0) {
    const AttackPhase before = state_.phase;
    if (state_.phase == AttackPhase::Initial) {
      state_ = step_phase(state_, {launch_, 0.0}, thresholds_);
    } else if (state_.phase == AttackPhase::Inducing && t > 0) {
      state_ = step_phase(state_, {std::nullopt, observed_mutant_density}, thresholds_);
    } else if (!is_terminal(state_.phase)) {
      ++state_.slots_in_phase;
    }
    if (state_.phase != before) {
      events_.push_back({t, t_slot, before, state_.phase, t == 0 ? (launch_ ? 1.0 : 0.0) : observed_mutant_density});
    }
    return activity(regular_access);
  }

  MuActivity activity(double regular_access = 0.0) const {
    switch (state_.phase) {
      case AttackPhase::Inducing: return {tmpl_.mu_density * tmpl_.mu_access_prob, false};
      case AttackPhase::Inactive:
        if (tmpl_.inactive == InactiveBehavior::RegularSu) return {tmpl_.mu_density * regular_access, true};
        return {};
      default: return {};
    }
  }

  const AttackState& state() const noexcept { return state_; }
  AttackState& state() noexcept { return state_; }
  const std::vector<PhaseEvent>& events() const noexcept { return events_; }
  const PhaseThresholds& thresholds() const noexcept { return thresholds_; }

 private:
  AttackTemplate tmpl_;
  PhaseThresholds thresholds_;
  bool launch_;
  AttackState state_;
  std::vector<PhaseEvent> events_;
};

/// Mean-field schedule: MUs read the true active SU density each update.
class OracleSchedule {
 public:
  OracleSchedule(AttackController controller, double su_density, StrategySet strategies, std::size_t window = 1)
      : controller_(std::move(controller)), su_density_(su_density), strategies_(std::move(strategies)),
        window_(window) {}

  MuActivity operator()(std::size_t t, const PopulationState& x) {
    const double rate = access_rate(x, strategies_);
    return controller_.advance(t, t * window_, su_density_ * rate, rate);
  }

  const AttackController& controller() const noexcept { return controller_; }

 private:
  AttackController controller_;
  double su_density_;
  StrategySet strategies_;
  std::size_t window_;
};

/// PR outage threshold on the active SU density, honouring the PT-at-PR flag.
inline double lambda_tilde(const GameEnv& env) {
  const auto& ch = env.channel;
  if (ch.pt_interference_at_pr) {
    const InterfererField pt{env.pt_density, ch.primary.power};
    return max_allowable_su_density(ch, std::span<const InterfererField>(&pt, 1));
  }
  return max_allowable_su_density(ch);
}

/// Classification under the standard template: induce from the first update,
/// withdraw after the hysteresis rule fires.
inline Classification classify_under_attack(const PayoffParams& payoffs, const GameEnv& env,
                                            const AttackTemplate& tmpl, const ClassifySettings& settings = {}) {
  const double threshold = lambda_tilde(env);
  OracleSchedule schedule(AttackController(tmpl, threshold, true), env.su_density, env.strategies);
  return classify_operating_point(payoffs, env, std::move(schedule), threshold, settings);
}

/// Launch iff the forecast from the estimated densities ends Fragile.
inline bool decide_launch(const DensityEstimates& estimates, const PayoffParams& payoffs, const GameEnv& env_template,
                          const AttackTemplate& tmpl, const ClassifySettings& settings = {}) {
  if (!(estimates.su > 0.0)) return false;
  GameEnv env = env_template;
  env.su_density = estimates.su;
  env.pt_density = estimates.pt;
  return is_fragile(classify_under_attack(payoffs, env, tmpl, settings).verdict);
}

}  // namespace ecodos
