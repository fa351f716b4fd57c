// Command-line front end: run presets or configs, sweep regions, split metrics into plot data.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecodos/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

std::optional<ecodos::RunMode> parse_mode(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "meanfield") return ecodos::RunMode::MeanField;
  if (s == "montecarlo") return ecodos::RunMode::MonteCarlo;
  throw ecodos::UsageError("--mode must be meanfield or montecarlo");
}

void report(const ecodos::RunSummary& s) {
  for (const auto& f : s.files) std::cout << "wrote " << f.string() << "\n";
  if (s.dynamics && !s.dynamics->metrics.empty()) {
    const auto& last = s.dynamics->metrics.back();
    std::cout << "terminal shares:";
    for (double v : last.shares) std::cout << ' ' << v;
    std::cout << "  pr_success " << last.pr_success << "  phase " << ecodos::to_string(last.mu_phase) << "\n";
  }
  for (const auto& c : s.region) {
    if (!c.error.empty()) std::cerr << "cell (" << c.delta << "," << c.nu << "," << c.kappa << "): " << c.error << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ecology-based DoS attack simulator for cognitive radio networks"};
  app.require_subcommand(1);

  std::string target;
  std::string mode;
  std::string out = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<std::string> sets;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--mode", mode, "meanfield | montecarlo");
    cmd->add_option("--set", sets, "dotted override key=value (repeatable)");
    cmd->add_option("--threads", threads, "worker threads for region sweeps")->capture_default_str();
  };

  auto* run_cmd = app.add_subcommand("run", "run a preset or a config file");
  run_cmd->add_option("target", target, "fig3-population | fig4-sinr-kappa0 | fig5-sinr-kappa8 | fig6-region | <config.json>")
      ->required();
  add_common(run_cmd);

  std::string sweep_target = "fig6-region";
  auto* sweep_cmd = app.add_subcommand("sweep", "classify a (delta, nu, kappa) grid");
  sweep_cmd->add_option("target", sweep_target, "preset or config file supplying the grid")->capture_default_str();
  add_common(sweep_cmd);

  std::string metrics_csv;
  std::string manifest;
  auto* plot_cmd = app.add_subcommand("plotdata", "split a metrics CSV into gnuplot-ready series files");
  plot_cmd->add_option("metrics", metrics_csv, "metrics.csv")->required();
  plot_cmd->add_option("--out", out, "output directory")->capture_default_str();
  plot_cmd->add_option("--manifest", manifest, "manifest.json for reference lines (default: beside the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    ecodos::RunOptions opts;
    opts.overrides = sets;
    opts.out_dir = out;
    opts.threads = threads;
    if (run_cmd->count("--seed") || sweep_cmd->count("--seed")) opts.seed = seed;
    opts.mode = parse_mode(mode);

    if (*run_cmd) {
      report(ecodos::run_preset(target, opts));
    } else if (*sweep_cmd) {
      report(ecodos::run_sweep(sweep_target, opts));
    } else if (*plot_cmd) {
      std::optional<std::filesystem::path> m;
      if (!manifest.empty()) m = manifest;
      const auto files = ecodos::emit_plotdata(metrics_csv, out, ecodos::plot_reference_for(metrics_csv, m));
      for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    }
  } catch (const ecodos::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ecodos::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
