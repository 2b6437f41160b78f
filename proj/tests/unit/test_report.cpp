#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmeg/config.hpp"
#include "dmeg/report.hpp"
#include "dmeg/runner.hpp"

using namespace dmeg;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(std::uint64_t length) {
  ExperimentConfig cfg;
  cfg.stream.length = length;
  cfg.stream.dim = 5;
  cfg.hidden_dim = 6;
  cfg.depth = 3;
  cfg.window = 100;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("empty run: header-only trajectory and T = 0 summary") {
  const auto log = run_dmeg(tiny(0));
  const auto csv = trajectory_csv(log);
  CHECK(csv.rfind("round,typeI_window,typeII_window,constraint_running_avg,lambda,p_0,p_1,p_2", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  const auto s = summary_json(log);
  CHECK(s["rounds"] == 0);
}

TEST_CASE("summary re-parses and reproduces the config hash") {
  const auto cfg = tiny(300);
  const auto log = run_dmeg(cfg);
  const auto dir = fresh_dir("dmeg_report_hash");
  const auto files = emit_report({log}, dir);
  CHECK(files.size() == 3);
  const auto summary = nlohmann::json::parse(slurp(dir / (run_stem(log) + ".summary.json")));
  const auto back = config_from_json(summary["config"]);
  CHECK(config_hash(back) == summary["config_hash"].get<std::string>());
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(summary.contains("wall_clock_seconds"));
  CHECK(run_stem(log) == "dmeg_g0.2000_s1");
}

TEST_CASE("trajectory has one row per window and the p columns") {
  const auto log = run_dmeg(tiny(350));
  const auto csv = trajectory_csv(log);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  std::istringstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(first.rfind("100,", 0) == 0);
}

TEST_CASE("prediction log round trip and rederivation") {
  const auto log = run_dmeg(tiny(450));
  const auto parsed = parse_predictions_csv(predictions_csv(log));
  CHECK(parsed.labels == log.predictions.labels);
  CHECK(parsed.predictions == log.predictions.predictions);
  CHECK(parsed.expert_predictions == log.predictions.expert_predictions);

  const auto dir = fresh_dir("dmeg_report_rederive");
  emit_report({log}, dir);
  const auto runs = rederive_reports(dir);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].windows_match);
  CHECK(runs[0].summary_match);
  CHECK(runs[0].overall == log.overall);
}

TEST_CASE("tampered trajectory is detected") {
  const auto log = run_dmeg(tiny(300));
  const auto dir = fresh_dir("dmeg_report_tamper");
  emit_report({log}, dir);
  const auto traj = dir / (run_stem(log) + ".trajectory.csv");
  auto text = slurp(traj);
  const auto pos = text.find('\n') + 1;
  text.replace(pos, text.find(',', pos) - pos, "99");
  std::ofstream(traj) << text;
  const auto runs = rederive_reports(dir);
  REQUIRE(runs.size() == 1);
  CHECK_FALSE(runs[0].windows_match);
}

TEST_CASE("report emission is byte-deterministic apart from the wall clock") {
  const auto a = run_dmeg(tiny(400));
  const auto b = run_dmeg(tiny(400));
  CHECK(trajectory_csv(a) == trajectory_csv(b));
  CHECK(predictions_csv(a) == predictions_csv(b));
  auto sa = summary_json(a), sb = summary_json(b);
  sa.erase("wall_clock_seconds");
  sb.erase("wall_clock_seconds");
  CHECK(sa.dump() == sb.dump());
}

TEST_CASE("sweep tables") {
  auto cfg = tiny(400);
  cfg.gamma_sweep = {0.15, 0.3};
  const auto logs = run_gamma_sweep(cfg);
  const auto trade = tradeoff_csv(logs);
  const auto stages = stage_csv(logs);
  CHECK(std::count(trade.begin(), trade.end(), '\n') == 3);
  CHECK(stages.rfind("gamma,stage_0_25,stage_25_50,stage_50_75,stage_75_100", 0) == 0);
}

TEST_CASE("unwritable directory") {
  const auto log = run_dmeg(tiny(10));
  CHECK_THROWS(emit_report({log}, "/proc/dmeg_cannot_write_here"));
}
