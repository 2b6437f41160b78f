#pragma once

// Result files. Per run, with stem "<label>_g<gamma>_s<seed>":
//   <stem>.trajectory.csv   one row per metric window
//   <stem>.predictions.csv  one row per round (label, hedged and per-expert predictions)
//   <stem>.summary.json     final metrics, config echo, certificate, wall clock
// Every byte except the wall-clock field is a function of (config, seed).

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmeg/metrics.hpp"

namespace dmeg {

std::string run_stem(const MetricsLog& log);

std::string trajectory_csv(const MetricsLog& log);
std::string predictions_csv(const MetricsLog& log);
nlohmann::json summary_json(const MetricsLog& log);

struct ReportOptions {
  bool write_predictions = true;
};

/// Writes the files of every log; returns the paths written. Throws
/// std::runtime_error when the directory cannot be created or written.
std::vector<std::filesystem::path> emit_report(const std::vector<MetricsLog>& logs,
                                               const std::filesystem::path& output_dir,
                                               const ReportOptions& options = {});

/// gamma/type-I/type-II table and quarter-stage type-I table for a sweep.
std::string tradeoff_csv(const std::vector<MetricsLog>& logs);
std::string stage_csv(const std::vector<MetricsLog>& logs);
void emit_sweep_tables(const std::vector<MetricsLog>& logs, const std::filesystem::path& output_dir);

PredictionLog parse_predictions_csv(const std::string& text);

struct RederivedRun {
  std::string stem;
  ErrorCounts overall;
  std::vector<ErrorCounts> stages;
  std::vector<ErrorCounts> experts;
  BestExpert best;
  bool windows_match = false;  // recount agrees with the trajectory file
  bool summary_match = false;  // recount agrees with the summary file
};

/// Recounts every run in `dir` from its prediction log, compares with the
/// stored trajectory and summary, and writes <stem>.rederived.json next to them.
std::vector<RederivedRun> rederive_reports(const std::filesystem::path& dir);

}  // namespace dmeg
