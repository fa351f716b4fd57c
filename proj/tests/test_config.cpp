#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecodos/experiments.hpp"

using namespace ecodos;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ecodos_test_config_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, BlankTextMeansDefaults) {
  EXPECT_EQ(parse_config(""), ScenarioConfig{});
  EXPECT_EQ(parse_config("  \n"), ScenarioConfig{});
  EXPECT_EQ(parse_config("{}"), ScenarioConfig{});
}

TEST(Config, RoundTripIsLossless) {
  ScenarioConfig c;
  c.mode = RunMode::MonteCarlo;
  c.seed = 1234567890123ULL;
  c.payoff = {20.0, 0.5, 6.0};
  c.channel.primary.distance = 12.5;
  c.channel.alpha = 3.7;
  c.strategies = StrategySet({0.0, 0.2, 1.0});
  c.x0 = {0.7, 0.2, 0.1};
  c.inactive_behavior = InactiveBehavior::RegularSu;
  c.launch_policy = LaunchPolicy::Always;
  c.sweep.kappa = {0.0, 1.0};
  EXPECT_EQ(parse_config(write_config(c)), c);
  EXPECT_EQ(write_config(parse_config(write_config(c))), write_config(c));
}

TEST(Config, PartialFileKeepsDefaults) {
  const auto c = parse_config(R"({"payoff": {"kappa": 4}, "channel": {"primary": {"distance": 20}}})");
  EXPECT_EQ(c.payoff.kappa, 4.0);
  EXPECT_EQ(c.payoff.delta, 10.0);
  EXPECT_EQ(c.channel.primary.distance, 20.0);
  EXPECT_EQ(c.channel.primary.power, 0.3);
}

TEST(Config, UnknownKeysNamed) {
  EXPECT_NE(error_of([] { parse_config(R"({"payof": {}})"); }).find("'payof'"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config(R"({"channel": {"primary": {"powr": 1}}})"); }).find("channel.primary.powr"),
            std::string::npos);
}

TEST(Config, WrongTypesAndValuesNamed) {
  EXPECT_NE(error_of([] { parse_config(R"({"steps": "many"})"); }).find("'steps'"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config(R"({"mode": "quantum"})"); }).find("mode"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config(R"({"attack": {"launch_policy": "maybe"}})"); }).find("attack.launch_policy"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config(R"({"channel": {"alpha": 2}})"); }).find("alpha"), std::string::npos);
  EXPECT_FALSE(error_of([] { parse_config("{not json"); }).empty());
  EXPECT_FALSE(error_of([] { parse_config(R"({"x0": [0.5, 0.6]})"); }).empty());
}

TEST(Config, ThreeStrategyDefaultStart) {
  const auto c = parse_config(R"({"strategies": [0, 0.5, 1]})");
  EXPECT_EQ(c.x0, (std::vector<double>{0.99, 0.0, 0.01}));
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("load");
  std::ofstream(dir / "c.json") << R"({"seed": 7})";
  EXPECT_EQ(load_config((dir / "c.json").string()).seed, 7u);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
}

TEST(Overrides, DottedKeysAndJsonValues) {
  const auto c = with_overrides(ScenarioConfig{}, {"payoff.kappa=8", "mode=montecarlo", "sweep.nu=[1,2]",
                                                   "channel.pt_interference_at_pr=true"});
  EXPECT_EQ(c.payoff.kappa, 8.0);
  EXPECT_EQ(c.mode, RunMode::MonteCarlo);
  EXPECT_EQ(c.sweep.nu, (std::vector<double>{1.0, 2.0}));
  EXPECT_TRUE(c.channel.pt_interference_at_pr);
  EXPECT_THROW(with_overrides(ScenarioConfig{}, {"payoff.kapa=1"}), ConfigError);
  EXPECT_THROW(with_overrides(ScenarioConfig{}, {"novalue"}), ConfigError);
  EXPECT_THROW(with_overrides(ScenarioConfig{}, {"payoff..kappa=1"}), ConfigError);
  EXPECT_THROW(with_overrides(ScenarioConfig{}, {"seed.x=1"}), ConfigError);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1e-7), "1e-07");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-HUGE_VAL), "-inf");
  for (double v : {0.1, 1.0 / 3.0, 4.5740475120378424e-05, -2.5e300}) {
    EXPECT_EQ(parse_number(format_number(v), 1), v);
  }
}

TEST(Csv, MetricsColumnOrder) {
  const auto cols = metrics_columns(2);
  const std::vector<std::string> expected{"t_update",          "t_slot",          "share_s1",          "share_s2",
                                          "active_su_density", "mu_phase",        "pr_success",        "su_success",
                                          "pr_sinr_db_mean",   "pr_sinr_db_median", "su_sinr_db_mean", "su_sinr_db_median",
                                          "payoff_s1",         "payoff_s2"};
  EXPECT_EQ(cols, expected);
}

TEST(Csv, MetricsRoundTrip) {
  ScenarioConfig c;
  c.steps = 12;
  const auto r = run(c);
  std::stringstream ss;
  write_metrics_csv(ss, r.metrics, 2);
  const auto t = read_csv(ss);
  ASSERT_EQ(t.rows.size(), 13u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(parse_number(t.rows[i][t.column("share_s2")], i + 2), r.metrics[i].shares[1]);
    EXPECT_EQ(parse_number(t.rows[i][t.column("pr_success")], i + 2), r.metrics[i].pr_success);
    EXPECT_EQ(t.rows[i][t.column("mu_phase")], to_string(r.metrics[i].mu_phase));
  }
}

TEST(Csv, MalformedRowsReportLine) {
  std::stringstream ss("a,b\n1,2\n3\n");
  try {
    read_csv(ss);
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  EXPECT_THROW(parse_number("1.5x", 4), CsvError);
  std::stringstream empty;
  EXPECT_THROW(read_csv(empty), CsvError);
}

TEST(Csv, PhaseAndRegionHeaders) {
  std::stringstream p, g;
  write_phase_csv(p, {{3, 60, AttackPhase::Inducing, AttackPhase::Inactive, 5e-5}});
  EXPECT_EQ(p.str(), "t_update,t_slot,old_phase,new_phase,trigger_value\n3,60,inducing,inactive,5e-05\n");
  RegionCell cell{10.0, 1.0, 8.0, {}, {}};
  cell.result.verdict = OperatingClass::Robust;
  write_region_csv(g, {cell});
  EXPECT_EQ(g.str(), "delta,nu,kappa,classification,terminal_mutant_share\n10,1,8,robust,0\n");
}

TEST(Presets, AllNamesResolve) {
  for (auto name : kPresetNames) EXPECT_NO_THROW(make_preset(name)) << name;
  EXPECT_THROW(make_preset("fig9"), UsageError);
  EXPECT_EQ(make_preset("fig5-sinr-kappa8").config.payoff.kappa, 8.0);
  EXPECT_EQ(make_preset("fig6-region").kind, PresetKind::Region);
  EXPECT_THROW(resolve_target("/nonexistent/cfg.json"), UsageError);
}

TEST(Presets, RunWritesOutputsAndManifest) {
  const auto dir = scratch("run");
  RunOptions opts;
  opts.out_dir = dir;
  opts.overrides = {"steps=20"};
  const auto s = run_preset("fig3-population", opts);
  EXPECT_EQ(s.files.size(), 3u);
  for (const char* f : {"metrics.csv", "phases.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "metrics.csv.tmp"));

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("source"), "fig3-population");
  EXPECT_EQ(m.at("kind"), "dynamics");
  EXPECT_TRUE(m.at("launched").get<bool>());
  // the manifest's config regenerates the run exactly
  const auto replay = config_from_json(m.at("config"));
  EXPECT_EQ(replay, s.config);
  std::stringstream again;
  write_metrics_csv(again, run(replay).metrics, 2);
  EXPECT_EQ(again.str(), slurp(dir / "metrics.csv"));
}

TEST(Presets, RegionRunWritesRegionCsv) {
  const auto dir = scratch("region");
  RunOptions opts;
  opts.out_dir = dir;
  opts.overrides = {"sweep.delta=[10]", "sweep.nu=[1]", "sweep.kappa=[0,8]"};
  run_sweep("fig6-region", opts);
  const auto body = slurp(dir / "region.csv");
  EXPECT_NE(body.find("10,1,0,fragile"), std::string::npos);
  EXPECT_NE(body.find("10,1,8,robust"), std::string::npos);
}

TEST(PlotData, SeriesFilesFromMetrics) {
  const auto dir = scratch("plot");
  RunOptions opts;
  opts.out_dir = dir;
  opts.overrides = {"steps=5"};
  run_preset("fig4-sinr-kappa0", opts);
  const auto files = emit_plotdata(dir / "metrics.csv", dir / "plot", plot_reference_for(dir / "metrics.csv"));
  EXPECT_EQ(files.size(), 11u);
  const auto threshold = slurp(dir / "plot" / "threshold_ref.dat");
  EXPECT_EQ(threshold.substr(0, threshold.find('\n')), "0 " + format_number(to_db(3.0)));
  const auto mutant = slurp(dir / "plot" / "mutant_share.dat");
  EXPECT_EQ(mutant.substr(0, mutant.find('\n')), "0 " + format_number(1.0 - 0.99));
}

TEST(PlotData, RejectsBadInput) {
  const auto dir = scratch("plotbad");
  std::ofstream(dir / "m.csv") << "t_update,share_s1\n0,1\n";
  EXPECT_THROW(emit_plotdata(dir / "m.csv", dir, {}), CsvError);
  EXPECT_THROW(emit_plotdata(dir / "absent.csv", dir, {}), std::runtime_error);
}
