#include "dmeg/hedge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dmeg {

ExpertWeights::ExpertWeights(std::size_t num_experts, double eta, bool includes_artificial)
    : cumulative_grad_(num_experts + (includes_artificial ? 1 : 0), 0.0),
      p_(cumulative_grad_.size(), 0.0),
      eta_(eta),
      includes_artificial_(includes_artificial) {
  if (num_experts == 0) throw std::invalid_argument("ExpertWeights needs at least one expert");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  recompute();
}

std::span<const double> ExpertWeights::expert_part() const {
  return std::span<const double>(p_).subspan(includes_artificial_ ? 1 : 0);
}

void ExpertWeights::update(std::span<const double> grad) {
  if (grad.size() != cumulative_grad_.size()) {
    throw std::invalid_argument("expert gradient has length " + std::to_string(grad.size()) +
                                ", expected " + std::to_string(cumulative_grad_.size()));
  }
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!std::isfinite(grad[k])) {
      throw std::invalid_argument("non-finite expert gradient at index " + std::to_string(k));
    }
  }
  for (std::size_t k = 0; k < grad.size(); ++k) cumulative_grad_[k] += grad[k];
  if (!frozen_) recompute();
}

void ExpertWeights::freeze_on(std::size_t index) {
  if (index >= p_.size()) throw std::out_of_range("freeze index out of range");
  std::fill(p_.begin(), p_.end(), 0.0);
  p_[index] = 1.0;
  frozen_ = true;
}

// softmax(-eta * cumulative_grad) with max-subtraction.
void ExpertWeights::recompute() {
  double lo = cumulative_grad_.front();
  for (double g : cumulative_grad_) lo = std::min(lo, g);
  double total = 0.0;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    p_[k] = std::exp(-eta_ * (cumulative_grad_[k] - lo));
    total += p_[k];
  }
  for (double& v : p_) v /= total;
}

DualVariable::DualVariable(double lambda_max, double eta_lambda)
    : lambda_max_(lambda_max), eta_lambda_(eta_lambda) {
  if (!(lambda_max >= 1.0)) throw std::invalid_argument("lambda_max must be >= 1");
  if (!(eta_lambda > 0.0)) throw std::invalid_argument("eta_lambda must be positive");
}

void DualVariable::update(double grad) {
  if (!std::isfinite(grad)) throw std::invalid_argument("non-finite dual gradient");
  cumulative_grad_ += grad;
  const double z = eta_lambda_ * cumulative_grad_;
  // Two-sided logistic keeps exp() from overflowing.
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  lambda_ = lambda_max_ * s;
}

double artificial_prediction(int constraint_class) { return constraint_class == 1 ? 1.0 : 0.0; }

double combine(const ExpertWeights& w, std::span<const double> expert_probs,
               std::optional<double> artificial_pred) {
  if (expert_probs.size() != w.num_experts()) {
    throw std::invalid_argument("combine: " + std::to_string(expert_probs.size()) +
                                " expert predictions for " + std::to_string(w.num_experts()) +
                                " experts");
  }
  if (w.includes_artificial() && !artificial_pred) {
    throw std::invalid_argument("combine: artificial expert enabled but no prediction given");
  }
  const auto experts = w.expert_part();
  double b = w.includes_artificial() ? w.artificial_weight() * *artificial_pred : 0.0;
  for (std::size_t k = 0; k < experts.size(); ++k) b += experts[k] * expert_probs[k];
  return std::clamp(b, 0.0, 1.0);
}

std::vector<double> grad_p(double grad_b, std::span<const double> expert_probs,
                           std::optional<double> artificial_pred, double g1) {
  std::vector<double> g;
  g.reserve(expert_probs.size() + 1);
  if (artificial_pred) g.push_back(grad_b * *artificial_pred);
  for (double s : expert_probs) g.push_back(grad_b * s);
  for (double& v : g) v = std::clamp(v, -g1, g1);
  return g;
}

ExpertWeights eg_update_experts(ExpertWeights w, std::span<const double> grad) {
  w.update(grad);
  return w;
}

DualVariable eg_update_lambda(DualVariable d, double grad) {
  d.update(grad);
  return d;
}

RateSchedule theorem_rates(double g1, double g2, long long horizon, std::size_t L) {
  if (!(g1 > 0.0 && g2 > 0.0) || horizon <= 0 || L == 0) {
    throw std::invalid_argument("theorem_rates: arguments must be positive");
  }
  RateSchedule r;
  r.horizon = horizon;
  r.num_experts = L + 1;
  r.g1 = g1;
  r.g2 = g2;
  const double T = static_cast<double>(horizon);
  r.eta = std::sqrt(std::log(static_cast<double>(L + 1)) / T) / g1;
  r.eta_lambda = std::sqrt(std::log(2.0) / T) / g2;
  return r;
}

double constraint_certificate(double g1, double g2, long long horizon, std::size_t L, double gamma) {
  if (!(g1 > 0.0 && g2 > 0.0) || horizon <= 0 || L == 0) {
    throw std::invalid_argument("constraint_certificate: arguments must be positive");
  }
  return gamma + 4.0 * std::max(g1, g2) *
                     std::sqrt(std::log(static_cast<double>(L + 1)) / static_cast<double>(horizon));
}

}  // namespace dmeg
