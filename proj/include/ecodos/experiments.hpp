#pragma once

// Figure presets and the run / sweep / plot-data drivers behind the CLI.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecodos/config.hpp"
#include "ecodos/csv.hpp"
#include "ecodos/engine.hpp"

#ifndef ECODOS_VERSION
#define ECODOS_VERSION "0.0.0"
#endif

namespace ecodos {

/// Bad command-line usage (unknown preset, malformed arguments).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PresetKind { Dynamics, Region };

struct Preset {
  std::string name;
  PresetKind kind = PresetKind::Dynamics;
  ScenarioConfig config;
};

inline constexpr std::string_view kPresetNames[] = {"fig3-population", "fig4-sinr-kappa0", "fig5-sinr-kappa8",
                                                    "fig6-region"};

inline bool is_preset(std::string_view name) {
  for (auto n : kPresetNames) {
    if (n == name) return true;
  }
  return false;
}

/// Evaluation parameter set with the per-figure payoff triple.
inline Preset make_preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  ScenarioConfig& c = p.config;
  c.launch_policy = LaunchPolicy::Always;
  if (name == "fig3-population" || name == "fig4-sinr-kappa0") {
    c.payoff = {10.0, 1.0, 0.0};
  } else if (name == "fig5-sinr-kappa8") {
    c.payoff = {10.0, 1.0, 8.0};
  } else if (name == "fig6-region") {
    c.payoff = {10.0, 1.0, 0.0};
    p.kind = PresetKind::Region;
  } else {
    throw UsageError("unknown preset '" + std::string(name) + "'");
  }
  c.validate();
  return p;
}

struct RunOptions {
  std::vector<std::string> overrides;  ///< dotted key=value assignments
  std::optional<std::uint64_t> seed;
  std::optional<RunMode> mode;
  std::filesystem::path out_dir = "out";
  unsigned threads = 1;
};

struct RunSummary {
  PresetKind kind = PresetKind::Dynamics;
  ScenarioConfig config;
  std::vector<std::filesystem::path> files;
  std::optional<RunResult> dynamics;
  std::vector<RegionCell> region;
};

/// Preset by name, else a config file path.
inline Preset resolve_target(const std::string& target) {
  if (is_preset(target)) return make_preset(target);
  if (!std::filesystem::exists(target)) throw UsageError("unknown preset or missing config file '" + target + "'");
  Preset p;
  p.name = target;
  p.config = load_config(target);
  return p;
}

inline ScenarioConfig apply_options(const ScenarioConfig& base, const RunOptions& opts) {
  ScenarioConfig c = with_overrides(base, opts.overrides);
  if (opts.seed) c.seed = *opts.seed;
  if (opts.mode) c.mode = *opts.mode;
  try {
    c.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline nlohmann::json make_manifest(const std::string& source, PresetKind kind, const ScenarioConfig& c) {
  nlohmann::json m{{"artifact", "ecodos"},
                   {"version", ECODOS_VERSION},
                   {"source", source},
                   {"kind", kind == PresetKind::Dynamics ? "dynamics" : "region"},
                   {"seed", c.seed},
                   {"lambda_tilde", lambda_tilde(c.game_env())},
                   {"config", config_to_json(c)}};
  return m;
}

namespace detail {

inline std::filesystem::path emit(const std::filesystem::path& dir, const std::string& name, const std::string& body,
                                  std::vector<std::filesystem::path>& files) {
  auto path = dir / name;
  write_file_atomic(path, body);
  files.push_back(path);
  return path;
}

inline RunSummary write_region(const std::string& source, const ScenarioConfig& c, const RunOptions& opts) {
  RunSummary s;
  s.kind = PresetKind::Region;
  s.config = c;
  s.region = sweep_region(c.sweep, c, opts.threads);
  std::filesystem::create_directories(opts.out_dir);
  std::ostringstream region;
  write_region_csv(region, s.region);
  emit(opts.out_dir, "region.csv", region.str(), s.files);
  emit(opts.out_dir, "manifest.json", make_manifest(source, s.kind, c).dump(2) + "\n", s.files);
  return s;
}

}  // namespace detail

/// Runs a preset or config file and writes its outputs under `opts.out_dir`.
///
/// Dynamics runs write metrics.csv, phases.csv and manifest.json; region runs
/// write region.csv and manifest.json.
inline RunSummary run_preset(const std::string& target, const RunOptions& opts) {
  const Preset preset = resolve_target(target);
  const ScenarioConfig c = apply_options(preset.config, opts);
  if (preset.kind == PresetKind::Region) return detail::write_region(preset.name, c, opts);

  RunSummary s;
  s.kind = PresetKind::Dynamics;
  s.config = c;
  s.dynamics = run(c);
  std::filesystem::create_directories(opts.out_dir);
  std::ostringstream metrics, phases;
  write_metrics_csv(metrics, s.dynamics->metrics, c.strategies.size());
  write_phase_csv(phases, s.dynamics->events);
  detail::emit(opts.out_dir, "metrics.csv", metrics.str(), s.files);
  detail::emit(opts.out_dir, "phases.csv", phases.str(), s.files);
  auto manifest = make_manifest(preset.name, s.kind, c);
  manifest["launched"] = s.dynamics->launched;
  detail::emit(opts.out_dir, "manifest.json", manifest.dump(2) + "\n", s.files);
  return s;
}

/// Region sweep over the grid in the target's config (default: the fig6 preset).
inline RunSummary run_sweep(const std::string& target, const RunOptions& opts) {
  const Preset preset = resolve_target(target);
  return detail::write_region(preset.name, apply_options(preset.config, opts), opts);
}

/// Constant reference lines drawn alongside the series.
struct PlotReference {
  double lambda_tilde_share = 0.0;  ///< lambda-tilde / lambda_SU
  double threshold_db = 0.0;        ///< 10 log10(eta_PR)

  static PlotReference from_config(const ScenarioConfig& c) {
    const double lt = lambda_tilde(c.game_env());
    return {c.density.su > 0.0 ? lt / c.density.su : 0.0, to_db(c.channel.primary.sinr_threshold)};
  }
};

/// Splits a metrics CSV into two-column (t_update, value) files, one per series.
inline std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& metrics_csv,
                                                        const std::filesystem::path& out_dir,
                                                        const PlotReference& ref) {
  std::ifstream in(metrics_csv);
  if (!in) throw std::runtime_error("cannot open '" + metrics_csv.string() + "'");
  const CsvTable table = read_csv(in);
  for (const char* required : {"t_update", "share_s1", "pr_sinr_db_mean", "su_sinr_db_mean"}) {
    if (!table.has(required)) throw CsvError(1, std::string("missing column '") + required + "'");
  }

  std::map<std::string, std::string> series;
  auto add = [&](const std::string& name, const std::string& t, double v) {
    series[name] += t + " " + format_number(v) + "\n";
  };
  for (const char* name : {"nonmutant_share", "mutant_share", "lambda_tilde_ref", "pr_sinr_db", "pr_sinr_db_median",
                           "su_sinr_db", "su_sinr_db_median", "threshold_ref", "pr_success", "su_success",
                           "active_su_density"}) {
    series[name];
  }
  std::size_t strategies = 0;
  while (table.has("share_s" + std::to_string(strategies + 1))) ++strategies;
  if (strategies > 2) {
    for (std::size_t k = 1; k <= strategies; ++k) series["share_s" + std::to_string(k)];
  }

  const std::size_t t_col = table.column("t_update");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r + 2;
    const std::string& t = row[t_col];
    parse_number(t, line);
    const double silent = parse_number(row[table.column("share_s1")], line);
    add("nonmutant_share", t, silent);
    add("mutant_share", t, 1.0 - silent);
    add("lambda_tilde_ref", t, ref.lambda_tilde_share);
    add("threshold_ref", t, ref.threshold_db);
    const std::pair<const char*, const char*> mapped[] = {
        {"pr_sinr_db", "pr_sinr_db_mean"}, {"pr_sinr_db_median", "pr_sinr_db_median"},
        {"su_sinr_db", "su_sinr_db_mean"}, {"su_sinr_db_median", "su_sinr_db_median"},
        {"pr_success", "pr_success"},      {"su_success", "su_success"},
        {"active_su_density", "active_su_density"}};
    for (const auto& [name, col] : mapped) add(name, t, parse_number(row[table.column(col)], line));
    if (strategies > 2) {
      for (std::size_t k = 1; k <= strategies; ++k) {
        const std::string col = "share_s" + std::to_string(k);
        add(col, t, parse_number(row[table.column(col)], line));
      }
    }
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& [name, body] : series) detail::emit(out_dir, name + ".dat", body, files);
  return files;
}

/// Reference lines from the manifest beside the CSV, or from defaults.
inline PlotReference plot_reference_for(const std::filesystem::path& metrics_csv,
                                        const std::optional<std::filesystem::path>& manifest = std::nullopt) {
  const auto path = manifest ? *manifest : metrics_csv.parent_path() / "manifest.json";
  std::ifstream in(path);
  if (!in) {
    if (manifest) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
    return PlotReference::from_config(ScenarioConfig{});
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.contains("config")) throw ConfigError(path.string() + ": manifest has no 'config'");
  return PlotReference::from_config(config_from_json(j.at("config")));
}

}  // namespace ecodos
