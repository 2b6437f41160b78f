#pragma once

// Prequential error bookkeeping. Predictions are committed before the label
// of the round is read; the recorder only ever sees (prediction, label) pairs
// for rounds that have finished.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dmeg {

/// Errors split by class. Type-I is conditioned on the constraint class,
/// type-II on the other class; an empty class reports 0.
struct ErrorCounts {
  std::uint64_t constraint_total = 0;
  std::uint64_t constraint_errors = 0;
  std::uint64_t other_total = 0;
  std::uint64_t other_errors = 0;

  void add(int prediction, int label, int constraint_class);
  double type1() const;
  double type2() const;
  double error_rate() const;
  bool operator==(const ErrorCounts&) const = default;
};

struct WindowRecord {
  std::uint64_t round = 0;  // rounds completed at the end of the window
  ErrorCounts counts;       // this window only
  double constraint_running_avg = 0.0;
  double lambda = 0.0;
  std::vector<double> p;
  std::vector<ErrorCounts> expert_counts;
};

/// Raw per-round log: label, hedged prediction, and one hard prediction per expert.
struct PredictionLog {
  std::size_t num_experts = 0;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> predictions;
  std::vector<std::uint8_t> expert_predictions;  // rounds x num_experts, row-major

  std::size_t rounds() const { return labels.size(); }
};

struct ExpertResult {
  std::size_t id = 0;  // 0-based head index; expert of depth id + 2 in layer count
  double type1 = 0.0;
  double type2 = 0.0;
};

struct BestExpert {
  bool feasible = false;
  ExpertResult expert;
};

struct MetricsLog {
  std::string algorithm;
  std::string label;  // e.g. "bl_depth4"
  double gamma = 0.0;
  std::uint64_t seed = 0;
  int constraint_class = 1;
  bool includes_artificial = false;
  std::size_t num_experts = 0;
  std::uint64_t window = 0;

  std::vector<double> initial_p;
  double initial_lambda = 0.0;

  std::vector<WindowRecord> windows;
  PredictionLog predictions;

  // Final summary
  std::uint64_t rounds = 0;
  ErrorCounts overall;
  std::vector<ErrorCounts> expert_overall;
  double constraint_running_avg = 0.0;
  double final_lambda = 0.0;
  std::vector<double> final_p;
  std::optional<double> certificate;
  nlohmann::json config;  // canonical config echo
  std::string config_hash;
  double wall_clock_seconds = 0.0;

  double type1() const { return overall.type1(); }
  double type2() const { return overall.type2(); }
  std::vector<ExpertResult> expert_results() const;
};

/// Among experts whose final type-I is at most gamma, the one with the lowest
/// type-II (ties: lower id). Not feasible when no expert qualifies.
BestExpert extract_best_expert(const MetricsLog& log, double gamma);

/// Type-I error over `parts` equal stages of the prediction log (stage j covers
/// rounds [floor(T j / parts), floor(T (j + 1) / parts))).
std::vector<ErrorCounts> stage_counts(const PredictionLog& log, int constraint_class, int parts = 4);

/// Window counts recomputed from the raw prediction log.
std::vector<ErrorCounts> window_counts(const PredictionLog& log, int constraint_class,
                                       std::uint64_t window);

class MetricsRecorder {
 public:
  MetricsRecorder(MetricsLog& log, std::uint64_t window, int constraint_class,
                  std::size_t num_experts, bool keep_predictions);

  /// Stores the round's committed predictions; the label is not yet known.
  void commit(int prediction, const std::vector<double>& expert_probs);
  /// Records the revealed label and the round's constraint surrogate.
  void reveal(int label, double constraint_surrogate, double lambda_after,
              const std::vector<double>& p_after);
  /// Flushes a trailing partial window and fills the summary.
  void finish(double final_lambda, const std::vector<double>& final_p);

 private:
  void close_window(double lambda, const std::vector<double>& p);

  MetricsLog& log_;
  std::uint64_t window_;
  int constraint_class_;
  bool keep_predictions_;
  bool pending_ = false;
  int pending_prediction_ = 0;
  std::vector<int> pending_experts_;
  ErrorCounts window_counts_;
  std::vector<ErrorCounts> window_expert_counts_;
  std::uint64_t in_window_ = 0;
  double constraint_sum_ = 0.0;
  double last_lambda_ = 0.0;
  std::vector<double> last_p_;
};

}  // namespace dmeg
