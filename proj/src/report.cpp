#include "dmeg/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dmeg {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string gamma_tag(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", g);
  return buf;
}

// Hedge weight columns p_0..p_L. p_0 is the artificial expert and stays 0
// when it is disabled, so the schema does not depend on that flag.
std::vector<std::string> p_columns(const MetricsLog& log) {
  std::vector<std::string> cols;
  for (std::size_t i = 0; i <= log.num_experts; ++i) cols.push_back("p_" + std::to_string(i));
  return cols;
}

json counts_json(const ErrorCounts& c) {
  return {{"constraint_total", c.constraint_total},
          {"constraint_errors", c.constraint_errors},
          {"other_total", c.other_total},
          {"other_errors", c.other_errors}};
}

ErrorCounts counts_from_json(const json& j) {
  ErrorCounts c;
  c.constraint_total = j.at("constraint_total").get<std::uint64_t>();
  c.constraint_errors = j.at("constraint_errors").get<std::uint64_t>();
  c.other_total = j.at("other_total").get<std::uint64_t>();
  c.other_errors = j.at("other_errors").get<std::uint64_t>();
  return c;
}

json best_json(const BestExpert& best) {
  if (!best.feasible) return {{"feasible", false}, {"status", "infeasible"}};
  return {{"feasible", true},
          {"id", best.expert.id},
          {"type1", best.expert.type1},
          {"type2", best.expert.type2}};
}

json experts_json(const std::vector<ErrorCounts>& experts) {
  json out = json::array();
  for (std::size_t k = 0; k < experts.size(); ++k) {
    out.push_back({{"id", k},
                   {"layers", k + 2},
                   {"type1", experts[k].type1()},
                   {"type2", experts[k].type2()},
                   {"counts", counts_json(experts[k])}});
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

std::string run_stem(const MetricsLog& log) {
  return log.label + "_g" + gamma_tag(log.gamma) + "_s" + std::to_string(log.seed);
}

std::string trajectory_csv(const MetricsLog& log) {
  std::ostringstream out;
  out << "round,typeI_window,typeII_window,constraint_running_avg,lambda";
  for (const auto& c : p_columns(log)) out << ',' << c;
  out << ",constraint_total,constraint_errors,other_total,other_errors";
  for (std::size_t k = 0; k < log.num_experts; ++k) {
    out << ",e" << k << "_typeI,e" << k << "_typeII";
  }
  out << '\n';
  for (const auto& w : log.windows) {
    out << w.round << ',' << fmt(w.counts.type1()) << ',' << fmt(w.counts.type2()) << ','
        << fmt(w.constraint_running_avg) << ',' << fmt(w.lambda);
    if (!log.includes_artificial) out << ',' << fmt(0.0);
    for (double v : w.p) out << ',' << fmt(v);
    out << ',' << w.counts.constraint_total << ',' << w.counts.constraint_errors << ','
        << w.counts.other_total << ',' << w.counts.other_errors;
    for (const auto& e : w.expert_counts) out << ',' << fmt(e.type1()) << ',' << fmt(e.type2());
    out << '\n';
  }
  return out.str();
}

std::string predictions_csv(const MetricsLog& log) {
  const PredictionLog& p = log.predictions;
  std::string out = "round,label,prediction,experts\n";
  out.reserve(out.size() + p.rounds() * (p.num_experts + 16));
  for (std::size_t t = 0; t < p.rounds(); ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += static_cast<char>('0' + p.labels[t]);
    out += ',';
    out += static_cast<char>('0' + p.predictions[t]);
    out += ',';
    for (std::size_t k = 0; k < p.num_experts; ++k) {
      out += static_cast<char>('0' + p.expert_predictions[t * p.num_experts + k]);
    }
    out += '\n';
  }
  return out;
}

json summary_json(const MetricsLog& log) {
  json stages = json::array();
  if (log.predictions.rounds() == log.rounds) {
    for (const auto& s : stage_counts(log.predictions, log.constraint_class)) stages.push_back(s.type1());
  }
  return {
      {"algorithm", log.algorithm},
      {"label", log.label},
      {"gamma", log.gamma},
      {"seed", log.seed},
      {"rounds", log.rounds},
      {"evaluation", "prequential: predict on x_t, commit, then reveal y_t and update"},
      {"decision_threshold", 0.5},
      {"constraint_class", log.constraint_class},
      {"type1", log.type1()},
      {"type2", log.type2()},
      {"counts", counts_json(log.overall)},
      {"experts", experts_json(log.expert_overall)},
      {"best_expert", best_json(extract_best_expert(log, log.gamma))},
      {"stage_type1", stages},
      {"constraint_running_avg", log.constraint_running_avg},
      {"includes_artificial", log.includes_artificial},
      {"initial_p", log.initial_p},
      {"initial_lambda", log.initial_lambda},
      {"final_lambda", log.final_lambda},
      {"final_p", log.final_p},
      {"window", log.window},
      {"certificate", log.certificate ? json(*log.certificate) : json(nullptr)},
      {"config", log.config},
      {"config_hash", log.config_hash},
      {"wall_clock_seconds", log.wall_clock_seconds},
  };
}

std::vector<std::filesystem::path> emit_report(const std::vector<MetricsLog>& logs,
                                               const std::filesystem::path& output_dir,
                                               const ReportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec || !std::filesystem::is_directory(output_dir)) {
    throw std::runtime_error("cannot create output directory " + output_dir.string());
  }
  std::vector<std::filesystem::path> written;
  for (const auto& log : logs) {
    const std::string stem = run_stem(log);
    const auto traj = output_dir / (stem + ".trajectory.csv");
    write_file(traj, trajectory_csv(log));
    written.push_back(traj);
    if (options.write_predictions) {
      const auto preds = output_dir / (stem + ".predictions.csv");
      write_file(preds, predictions_csv(log));
      written.push_back(preds);
    }
    const auto summary = output_dir / (stem + ".summary.json");
    write_file(summary, summary_json(log).dump(2) + "\n");
    written.push_back(summary);
  }
  return written;
}

std::string tradeoff_csv(const std::vector<MetricsLog>& logs) {
  std::ostringstream out;
  out << "gamma,typeI,typeII,constraint_running_avg,final_lambda\n";
  for (const auto& log : logs) {
    out << fmt(log.gamma) << ',' << fmt(log.type1()) << ',' << fmt(log.type2()) << ','
        << fmt(log.constraint_running_avg) << ',' << fmt(log.final_lambda) << '\n';
  }
  return out.str();
}

std::string stage_csv(const std::vector<MetricsLog>& logs) {
  std::ostringstream out;
  out << "gamma,stage_0_25,stage_25_50,stage_50_75,stage_75_100\n";
  for (const auto& log : logs) {
    out << fmt(log.gamma);
    for (const auto& s : stage_counts(log.predictions, log.constraint_class)) out << ',' << fmt(s.type1());
    out << '\n';
  }
  return out.str();
}

void emit_sweep_tables(const std::vector<MetricsLog>& logs, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  write_file(output_dir / "sweep_tradeoff.csv", tradeoff_csv(logs));
  write_file(output_dir / "sweep_stages.csv", stage_csv(logs));
}

PredictionLog parse_predictions_csv(const std::string& text) {
  PredictionLog log;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("round,label,prediction", 0) != 0) {
    throw std::runtime_error("not a predictions file");
  }
  bool first = true;
  std::uint64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string experts = f.size() > 3 ? f[3] : "";
    if (f.size() < 3 || f[1].size() != 1 || f[2].size() != 1) {
      throw std::runtime_error("malformed predictions row " + std::to_string(row));
    }
    if (first) {
      log.num_experts = experts.size();
      first = false;
    } else if (experts.size() != log.num_experts) {
      throw std::runtime_error("predictions row " + std::to_string(row) + " has wrong expert count");
    }
    log.labels.push_back(static_cast<std::uint8_t>(f[1][0] - '0'));
    log.predictions.push_back(static_cast<std::uint8_t>(f[2][0] - '0'));
    for (char c : experts) log.expert_predictions.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return log;
}

std::vector<RederivedRun> rederive_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> summaries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".summary.json";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      summaries.push_back(entry.path());
    }
  }
  std::sort(summaries.begin(), summaries.end());

  std::vector<RederivedRun> out;
  for (const auto& summary_path : summaries) {
    const std::string name = summary_path.filename().string();
    RederivedRun run;
    run.stem = name.substr(0, name.size() - std::string(".summary.json").size());
    const auto preds_path = dir / (run.stem + ".predictions.csv");
    if (!std::filesystem::exists(preds_path)) continue;

    const json summary = json::parse(read_file(summary_path));
    const int cc = summary.at("constraint_class").get<int>();
    const auto window = summary.at("window").get<std::uint64_t>();
    const double gamma = summary.at("gamma").get<double>();
    const PredictionLog preds = parse_predictions_csv(read_file(preds_path));

    for (std::size_t t = 0; t < preds.rounds(); ++t) run.overall.add(preds.predictions[t], preds.labels[t], cc);
    run.stages = stage_counts(preds, cc);
    run.experts.assign(preds.num_experts, ErrorCounts{});
    for (std::size_t t = 0; t < preds.rounds(); ++t) {
      for (std::size_t k = 0; k < preds.num_experts; ++k) {
        run.experts[k].add(preds.expert_predictions[t * preds.num_experts + k], preds.labels[t], cc);
      }
    }
    MetricsLog shell;
    shell.expert_overall = run.experts;
    run.best = extract_best_expert(shell, gamma);
    run.summary_match = counts_from_json(summary.at("counts")) == run.overall;

    // Compare window counts and rates against the trajectory file.
    const auto windows = window_counts(preds, cc, window);
    const auto traj_path = dir / (run.stem + ".trajectory.csv");
    if (std::filesystem::exists(traj_path)) {
      std::istringstream traj(read_file(traj_path));
      std::string line;
      std::getline(traj, line);
      const auto header = split(line, ',');
      const auto col = [&](const std::string& n) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
          if (header[i] == n) return i;
        }
        throw std::runtime_error(traj_path.string() + " lacks column " + n);
      };
      const std::size_t c_round = col("round");
      const std::size_t c_t1 = col("typeI_window"), c_t2 = col("typeII_window");
      const std::size_t c_ct = col("constraint_total"), c_ce = col("constraint_errors");
      const std::size_t c_ot = col("other_total"), c_oe = col("other_errors");
      bool match = true;
      std::size_t i = 0;
      while (std::getline(traj, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (i >= windows.size()) {
          match = false;
          break;
        }
        const ErrorCounts& w = windows[i++];
        const std::uint64_t end = std::min<std::uint64_t>(i * window, preds.rounds());
        match = match && std::stoull(f[c_round]) == end && std::stoull(f[c_ct]) == w.constraint_total &&
                std::stoull(f[c_ce]) == w.constraint_errors && std::stoull(f[c_ot]) == w.other_total &&
                std::stoull(f[c_oe]) == w.other_errors && f[c_t1] == fmt(w.type1()) &&
                f[c_t2] == fmt(w.type2());
      }
      run.windows_match = match && i == windows.size();
    }

    json stages = json::array();
    for (const auto& s : run.stages) stages.push_back(s.type1());
    const json doc = {{"stem", run.stem},
                      {"rounds", preds.rounds()},
                      {"type1", run.overall.type1()},
                      {"type2", run.overall.type2()},
                      {"counts", counts_json(run.overall)},
                      {"stage_type1", stages},
                      {"experts", experts_json(run.experts)},
                      {"best_expert", best_json(run.best)},
                      {"windows_match", run.windows_match},
                      {"summary_match", run.summary_match}};
    write_file(dir / (run.stem + ".rederived.json"), doc.dump(2) + "\n");
    out.push_back(std::move(run));
  }
  return out;
}

}  // namespace dmeg
