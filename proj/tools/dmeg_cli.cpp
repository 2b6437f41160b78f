// dmeg: run DMEG experiments and baselines on data streams.
//
//   dmeg run    --config FILE [--algorithm A] [--gamma G] [--seed S] [--out DIR]
//   dmeg sweep  --config FILE [--out DIR] [--jobs N]
//   dmeg report --in DIR
//
// Exit codes: 0 success, 1 report inconsistency or I/O failure, 2 config error,
// 3 numeric abort.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dmeg/checkpoint.hpp"
#include "dmeg/config.hpp"
#include "dmeg/error.hpp"
#include "dmeg/report.hpp"
#include "dmeg/runner.hpp"

namespace {

void print_line(const dmeg::MetricsLog& log) {
  std::printf("%-22s gamma=%.4f seed=%llu rounds=%llu typeI=%.4f typeII=%.4f constraint_avg=%.4f lambda=%.4f\n",
              log.label.c_str(), log.gamma, static_cast<unsigned long long>(log.seed),
              static_cast<unsigned long long>(log.rounds), log.type1(), log.type2(),
              log.constraint_running_avg, log.final_lambda);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep minimax exponentiated gradient for online Neyman-Pearson classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> algorithm;
  std::optional<double> gamma;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned jobs = 1;
  std::string in_dir;

  auto* run = app.add_subcommand("run", "run one algorithm");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--algorithm", algorithm, "dmeg | bl | mol | dmeg_unconstrained");
  run->add_option("--gamma", gamma, "constraint threshold");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run DMEG once per gamma in gamma_sweep");
  sweep->add_option("--config", config_path, "JSON config file")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "concurrent runs");

  auto* report = app.add_subcommand("report", "re-derive summaries from prediction logs");
  report->add_option("--in", in_dir, "directory with run outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*report) {
      const auto runs = dmeg::rederive_reports(in_dir);
      bool ok = true;
      for (const auto& r : runs) {
        std::printf("%-40s typeI=%.4f typeII=%.4f windows_match=%s summary_match=%s best_expert=%s\n",
                    r.stem.c_str(), r.overall.type1(), r.overall.type2(),
                    r.windows_match ? "yes" : "NO", r.summary_match ? "yes" : "NO",
                    r.best.feasible ? std::to_string(r.best.expert.id).c_str() : "infeasible");
        ok = ok && r.windows_match && r.summary_match;
      }
      if (runs.empty()) std::printf("no runs with prediction logs in %s\n", in_dir.c_str());
      return ok ? 0 : 1;
    }

    dmeg::ExperimentConfig cfg = dmeg::load_config(config_path);
    if (algorithm) cfg.algorithm = dmeg::algorithm_from_string(*algorithm);
    if (gamma) cfg.objective.gamma = *gamma;
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    dmeg::validate(cfg);
    const dmeg::ReportOptions opts{cfg.write_predictions};

    if (*sweep) {
      const auto logs = dmeg::run_gamma_sweep(cfg, jobs);
      for (const auto& log : logs) print_line(log);
      dmeg::emit_report(logs, cfg.output_dir, opts);
      dmeg::emit_sweep_tables(logs, cfg.output_dir);
      return 0;
    }

    std::vector<dmeg::MetricsLog> logs;
    if (cfg.algorithm == dmeg::Algorithm::dmeg && cfg.write_checkpoint) {
      dmeg::HedgedNetwork net;
      logs.push_back(dmeg::run_dmeg(cfg, &net));
      std::filesystem::create_directories(cfg.output_dir);
      dmeg::save_checkpoint(net, cfg.output_dir / (dmeg::run_stem(logs.back()) + ".ckpt.json"));
    } else {
      logs = dmeg::run_algorithm(cfg);
    }
    for (const auto& log : logs) print_line(log);
    if (cfg.algorithm == dmeg::Algorithm::bl && !logs.empty()) {
      std::printf("best BL: %s\n", logs[dmeg::best_bl_index(logs)].label.c_str());
    }
    dmeg::emit_report(logs, cfg.output_dir, opts);
    return 0;
  } catch (const dmeg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dmeg::NumericError& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
