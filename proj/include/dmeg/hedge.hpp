#pragma once

// Exponentiated-gradient players of the minimax game.
//
// ExpertWeights keeps p on the simplex over the experts (plus, optionally, a
// constant "artificial" expert at index 0 that always predicts the
// constraint class). DualVariable keeps lambda in [0, lambda_max] as EG over
// the two static points {0, lambda_max}. Both store the cumulative gradient
// in 64-bit and recompute their point from it, so the incremental updates
// coincide with the closed form at every round.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dmeg {

class ExpertWeights {
 public:
  /// `num_experts` counts network heads only; the artificial expert is extra.
  ExpertWeights(std::size_t num_experts, double eta, bool includes_artificial);

  /// All weights; index 0 is the artificial expert when includes_artificial().
  std::span<const double> p() const { return p_; }
  /// Weights of the network heads only.
  std::span<const double> expert_part() const;
  double artificial_weight() const { return includes_artificial_ ? p_.front() : 0.0; }

  std::span<const double> cumulative_grad() const { return cumulative_grad_; }
  double eta() const { return eta_; }
  bool includes_artificial() const { return includes_artificial_; }
  std::size_t size() const { return p_.size(); }
  std::size_t num_experts() const { return p_.size() - (includes_artificial_ ? 1 : 0); }

  /// Adds `grad` to the cumulative gradient and renormalizes. Throws on
  /// length mismatch or non-finite entries.
  void update(std::span<const double> grad);

  /// Places all mass on entry `index` and freezes the weights: later updates
  /// only accumulate gradients.
  void freeze_on(std::size_t index);
  bool frozen() const { return frozen_; }

 private:
  void recompute();

  std::vector<double> cumulative_grad_;
  std::vector<double> p_;
  double eta_;
  bool includes_artificial_;
  bool frozen_ = false;
};

class DualVariable {
 public:
  DualVariable(double lambda_max, double eta_lambda);

  /// 0 before the first update, then lambda_max * logistic(eta_lambda * cumulative_grad).
  double lambda() const { return lambda_; }
  double lambda_max() const { return lambda_max_; }
  double eta_lambda() const { return eta_lambda_; }
  double cumulative_grad() const { return cumulative_grad_; }

  void update(double grad);

 private:
  double cumulative_grad_ = 0.0;
  double lambda_ = 0.0;
  double lambda_max_;
  double eta_lambda_;
};

struct RateSchedule {
  double eta = 0.01;
  double eta_lambda = 0.01;
  long long horizon = 0;
  std::size_t num_experts = 0;
  double g1 = 0.0;
  double g2 = 0.0;
};

/// The constant prediction of the artificial expert: probability 1 of class 1
/// when the constraint class is 1, probability 0 otherwise.
double artificial_prediction(int constraint_class);

/// <p, S>. `expert_probs` has one entry per network head; when `w` carries an
/// artificial expert, `artificial_pred` must be supplied.
double combine(const ExpertWeights& w, std::span<const double> expert_probs,
               std::optional<double> artificial_pred = std::nullopt);

/// Chain rule through the linear combination, each entry clipped to [-g1, g1].
/// The artificial entry, when present, comes first.
std::vector<double> grad_p(double grad_b, std::span<const double> expert_probs,
                           std::optional<double> artificial_pred, double g1);

ExpertWeights eg_update_experts(ExpertWeights w, std::span<const double> grad);
DualVariable eg_update_lambda(DualVariable d, double grad);

/// Rates that make the regret bounds hold over horizon T, with L + 1 experts.
RateSchedule theorem_rates(double g1, double g2, long long horizon, std::size_t L);

/// gamma + 4 max(g1, g2) sqrt(log(L + 1) / T).
double constraint_certificate(double g1, double g2, long long horizon, std::size_t L, double gamma);

}  // namespace dmeg
