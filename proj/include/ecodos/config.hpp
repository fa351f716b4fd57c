#pragma once

// Scenario configuration as JSON: strict loading, defaults, dotted overrides.

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecodos/engine.hpp"

namespace ecodos {

/// Configuration rejected; the message names the offending key or location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

// Pulls known keys out of one JSON object and rejects whatever is left.
class SectionReader {
 public:
  SectionReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("key '" + where() + "': expected an object");
  }

  template <class T>
  void read(std::string_view key, T& out) {
    const std::string k(key);
    seen_.insert(k);
    auto it = obj_.find(k);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("key '" + qualified(k) + "': wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  template <class Fn>
  void section(std::string_view key, Fn&& fn) {
    const std::string k(key);
    seen_.insert(k);
    auto it = obj_.find(k);
    if (it == obj_.end()) return;
    SectionReader sub(*it, qualified(k));
    fn(sub);
    sub.finish();
  }

  std::string choice(std::string_view key, std::string current, std::initializer_list<std::string_view> allowed) {
    read(key, current);
    for (auto a : allowed) {
      if (current == a) return current;
    }
    throw ConfigError("key '" + qualified(std::string(key)) + "': unknown value '" + current + "'");
  }

  bool has(std::string_view key) const { return obj_.contains(std::string(key)); }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + qualified(k) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string qualified(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_link(SectionReader& r, LinkParams& l) {
  r.read("power", l.power);
  r.read("distance", l.distance);
  r.read("sinr_threshold", l.sinr_threshold);
  r.read("outage", l.outage);
}

inline json link_json(const LinkParams& l) {
  return {{"power", l.power}, {"distance", l.distance}, {"sinr_threshold", l.sinr_threshold}, {"outage", l.outage}};
}

}  // namespace detail

/// Builds a validated config from a JSON object; absent keys keep their defaults.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::SectionReader;
  ScenarioConfig c;
  SectionReader root(j, "");
  c.mode = root.choice("mode", std::string(to_string(c.mode)), {"meanfield", "montecarlo"}) == "meanfield"
               ? RunMode::MeanField
               : RunMode::MonteCarlo;
  root.read("seed", c.seed);
  root.read("region_side", c.region_side);
  root.read("steps", c.steps);
  root.read("window", c.window);
  root.read("h", c.h);

  std::vector<double> strategies(c.strategies.probs().begin(), c.strategies.probs().end());
  root.read("strategies", strategies);
  try {
    c.strategies = StrategySet(strategies);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("key 'strategies': ") + e.what());
  }
  if (root.has("x0")) {
    root.read("x0", c.x0);
  } else if (c.strategies.size() != 2) {
    c.x0.assign(c.strategies.size(), 0.0);
    c.x0.front() = 0.99;
    c.x0.back() = 0.01;
  } else {
    root.read("x0", c.x0);
  }

  root.section("channel", [&](SectionReader& r) {
    r.read("alpha", c.channel.alpha);
    r.read("noise", c.channel.noise);
    r.read("mu_power", c.channel.mu_power);
    r.read("d_min", c.channel.d_min);
    r.read("pt_interference_at_pr", c.channel.pt_interference_at_pr);
    r.read("pt_interference_at_su", c.channel.pt_interference_at_su);
    r.section("primary", [&](SectionReader& s) { detail::read_link(s, c.channel.primary); });
    r.section("secondary", [&](SectionReader& s) { detail::read_link(s, c.channel.secondary); });
  });
  root.section("density", [&](SectionReader& r) {
    r.read("pt", c.density.pt);
    r.read("su", c.density.su);
    r.read("mu", c.density.mu);
  });
  root.section("payoff", [&](SectionReader& r) {
    r.read("delta", c.payoff.delta);
    r.read("nu", c.payoff.nu);
    r.read("kappa", c.payoff.kappa);
  });
  root.section("game", [&](SectionReader& r) {
    r.read("sensing_radius", c.sensing_radius);
    r.read("mu_sensing_radius", c.mu_sensing_radius);
    r.read("extinction_tol", c.extinction_tol);
    r.read("classify_steps", c.classify_steps);
  });
  root.section("attack", [&](SectionReader& r) {
    r.read("mu_access_prob", c.mu_access_prob);
    r.read("hysteresis", c.hysteresis);
    c.inactive_behavior =
        r.choice("inactive_behavior", std::string(to_string(c.inactive_behavior)), {"silent", "regular_su"}) == "silent"
            ? InactiveBehavior::Silent
            : InactiveBehavior::RegularSu;
    c.launch_policy = r.choice("launch_policy", std::string(to_string(c.launch_policy)), {"decide", "always"}) == "decide"
                          ? LaunchPolicy::Decide
                          : LaunchPolicy::Always;
  });
  root.section("montecarlo", [&](SectionReader& r) { r.read("resample_topology", c.resample_topology); });
  root.section("sweep", [&](SectionReader& r) {
    r.read("delta", c.sweep.delta);
    r.read("nu", c.sweep.nu);
    r.read("kappa", c.sweep.kappa);
  });
  root.finish();

  try {
    c.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// Every field, defaults included.
inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  const auto probs = c.strategies.probs();
  return json{
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"region_side", c.region_side},
      {"steps", c.steps},
      {"window", c.window},
      {"h", c.h},
      {"strategies", std::vector<double>(probs.begin(), probs.end())},
      {"x0", c.x0},
      {"channel",
       {{"alpha", c.channel.alpha},
        {"noise", c.channel.noise},
        {"mu_power", c.channel.mu_power},
        {"d_min", c.channel.d_min},
        {"pt_interference_at_pr", c.channel.pt_interference_at_pr},
        {"pt_interference_at_su", c.channel.pt_interference_at_su},
        {"primary", detail::link_json(c.channel.primary)},
        {"secondary", detail::link_json(c.channel.secondary)}}},
      {"density", {{"pt", c.density.pt}, {"su", c.density.su}, {"mu", c.density.mu}}},
      {"payoff", {{"delta", c.payoff.delta}, {"nu", c.payoff.nu}, {"kappa", c.payoff.kappa}}},
      {"game",
       {{"sensing_radius", c.sensing_radius},
        {"mu_sensing_radius", c.mu_sensing_radius},
        {"extinction_tol", c.extinction_tol},
        {"classify_steps", c.classify_steps}}},
      {"attack",
       {{"mu_access_prob", c.mu_access_prob},
        {"hysteresis", c.hysteresis},
        {"inactive_behavior", to_string(c.inactive_behavior)},
        {"launch_policy", to_string(c.launch_policy)}}},
      {"montecarlo", {{"resample_topology", c.resample_topology}}},
      {"sweep", {{"delta", c.sweep.delta}, {"nu", c.sweep.nu}, {"kappa", c.sweep.kappa}}},
  };
}

inline std::string write_config(const ScenarioConfig& c) { return config_to_json(c).dump(2) + "\n"; }

/// Parses config text. Blank text means all defaults.
inline ScenarioConfig parse_config(std::string_view text, std::string_view source = "<config>") {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return config_from_json(nlohmann::json::object());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Applies `key.path=value` to a config JSON; the value is read as JSON, else as a string.
inline void apply_override(nlohmann::json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    nlohmann::json& child = (*node)[part];
    if (child.is_null()) child = nlohmann::json::object();
    if (!child.is_object()) throw ConfigError("override key '" + key + "': '" + part + "' is not a section");
    node = &child;
    start = dot + 1;
  }
}

inline ScenarioConfig with_overrides(const ScenarioConfig& base, const std::vector<std::string>& assignments) {
  if (assignments.empty()) return base;
  auto j = config_to_json(base);
  for (const auto& a : assignments) apply_override(j, a);
  return config_from_json(j);
}

}  // namespace ecodos
