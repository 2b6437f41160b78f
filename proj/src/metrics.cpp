#include "dmeg/metrics.hpp"

#include <stdexcept>

namespace dmeg {

void ErrorCounts::add(int prediction, int label, int constraint_class) {
  const bool wrong = prediction != label;
  if (label == constraint_class) {
    ++constraint_total;
    constraint_errors += wrong;
  } else {
    ++other_total;
    other_errors += wrong;
  }
}

double ErrorCounts::type1() const {
  return constraint_total == 0 ? 0.0
                               : static_cast<double>(constraint_errors) / static_cast<double>(constraint_total);
}

double ErrorCounts::type2() const {
  return other_total == 0 ? 0.0 : static_cast<double>(other_errors) / static_cast<double>(other_total);
}

double ErrorCounts::error_rate() const {
  const auto n = constraint_total + other_total;
  return n == 0 ? 0.0 : static_cast<double>(constraint_errors + other_errors) / static_cast<double>(n);
}

std::vector<ExpertResult> MetricsLog::expert_results() const {
  std::vector<ExpertResult> out;
  for (std::size_t k = 0; k < expert_overall.size(); ++k) {
    out.push_back({k, expert_overall[k].type1(), expert_overall[k].type2()});
  }
  return out;
}

BestExpert extract_best_expert(const MetricsLog& log, double gamma) {
  BestExpert best;
  for (const auto& e : log.expert_results()) {
    if (e.type1 > gamma) continue;
    if (!best.feasible || e.type2 < best.expert.type2) {
      best.feasible = true;
      best.expert = e;
    }
  }
  return best;
}

std::vector<ErrorCounts> stage_counts(const PredictionLog& log, int constraint_class, int parts) {
  if (parts < 1) throw std::invalid_argument("stage_counts: parts must be >= 1");
  const std::uint64_t T = log.rounds();
  std::vector<ErrorCounts> out(static_cast<std::size_t>(parts));
  for (int j = 0; j < parts; ++j) {
    const std::uint64_t lo = T * static_cast<std::uint64_t>(j) / static_cast<std::uint64_t>(parts);
    const std::uint64_t hi = T * static_cast<std::uint64_t>(j + 1) / static_cast<std::uint64_t>(parts);
    for (std::uint64_t t = lo; t < hi; ++t) {
      out[static_cast<std::size_t>(j)].add(log.predictions[t], log.labels[t], constraint_class);
    }
  }
  return out;
}

std::vector<ErrorCounts> window_counts(const PredictionLog& log, int constraint_class,
                                       std::uint64_t window) {
  std::vector<ErrorCounts> out;
  for (std::uint64_t start = 0; start < log.rounds(); start += window) {
    ErrorCounts c;
    const std::uint64_t end = std::min<std::uint64_t>(start + window, log.rounds());
    for (std::uint64_t t = start; t < end; ++t) c.add(log.predictions[t], log.labels[t], constraint_class);
    out.push_back(c);
  }
  return out;
}

MetricsRecorder::MetricsRecorder(MetricsLog& log, std::uint64_t window, int constraint_class,
                                 std::size_t num_experts, bool keep_predictions)
    : log_(log),
      window_(window),
      constraint_class_(constraint_class),
      keep_predictions_(keep_predictions),
      pending_experts_(num_experts, 0),
      window_expert_counts_(num_experts) {
  if (window == 0) throw std::invalid_argument("metrics window must be >= 1");
  log_.window = window;
  log_.num_experts = num_experts;
  log_.constraint_class = constraint_class;
  log_.expert_overall.assign(num_experts, ErrorCounts{});
  log_.predictions.num_experts = num_experts;
}

void MetricsRecorder::commit(int prediction, const std::vector<double>& expert_probs) {
  if (pending_) throw std::logic_error("commit called twice without reveal");
  if (expert_probs.size() != pending_experts_.size()) {
    throw std::invalid_argument("commit: wrong number of expert predictions");
  }
  pending_ = true;
  pending_prediction_ = prediction;
  for (std::size_t k = 0; k < expert_probs.size(); ++k) pending_experts_[k] = expert_probs[k] >= 0.5;
}

void MetricsRecorder::reveal(int label, double constraint_surrogate, double lambda_after,
                             const std::vector<double>& p_after) {
  if (!pending_) throw std::logic_error("reveal called before commit");
  pending_ = false;
  log_.overall.add(pending_prediction_, label, constraint_class_);
  window_counts_.add(pending_prediction_, label, constraint_class_);
  for (std::size_t k = 0; k < pending_experts_.size(); ++k) {
    log_.expert_overall[k].add(pending_experts_[k], label, constraint_class_);
    window_expert_counts_[k].add(pending_experts_[k], label, constraint_class_);
  }
  if (keep_predictions_) {
    log_.predictions.labels.push_back(static_cast<std::uint8_t>(label));
    log_.predictions.predictions.push_back(static_cast<std::uint8_t>(pending_prediction_));
    for (int e : pending_experts_) log_.predictions.expert_predictions.push_back(static_cast<std::uint8_t>(e));
  }
  ++log_.rounds;
  constraint_sum_ += constraint_surrogate;
  log_.constraint_running_avg = constraint_sum_ / static_cast<double>(log_.rounds);
  last_lambda_ = lambda_after;
  last_p_ = p_after;
  if (++in_window_ == window_) close_window(lambda_after, p_after);
}

void MetricsRecorder::close_window(double lambda, const std::vector<double>& p) {
  WindowRecord rec;
  rec.round = log_.rounds;
  rec.counts = window_counts_;
  rec.constraint_running_avg = log_.constraint_running_avg;
  rec.lambda = lambda;
  rec.p = p;
  rec.expert_counts = window_expert_counts_;
  log_.windows.push_back(std::move(rec));
  window_counts_ = {};
  for (auto& c : window_expert_counts_) c = {};
  in_window_ = 0;
}

void MetricsRecorder::finish(double final_lambda, const std::vector<double>& final_p) {
  if (in_window_ > 0) close_window(last_lambda_, last_p_);
  log_.final_lambda = final_lambda;
  log_.final_p = final_p;
}

}  // namespace dmeg
