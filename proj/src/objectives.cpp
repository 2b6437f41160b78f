#include "dmeg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dmeg {
namespace {

constexpr double kMinClassFreq = 1e-3;

void check_prediction(double b) {
  if (!(b >= 0.0 && b <= 1.0)) {
    throw std::domain_error("prediction b=" + std::to_string(b) + " outside [0, 1]");
  }
}

void check_label(int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1, got " + std::to_string(y));
}

// Probability assigned to the true label.
double hit_probability(double b, int y) { return y == 1 ? b : 1.0 - b; }

double raw_bce(double b, int y) {
  const double q = hit_probability(b, y);
  return q > 0.0 ? -std::log(q) : std::numeric_limits<double>::infinity();
}

double raw_bce_grad(double b, int y) { return y == 1 ? -1.0 / b : 1.0 / (1.0 - b); }

struct Gated {
  double value;
  double grad;
};

// BCE scaled by 1/divisor and clipped; the derivative vanishes once clipped.
Gated scaled_clipped_bce(double b, int y, double divisor, double clip) {
  const double raw = raw_bce(b, y) / divisor;
  if (raw >= clip) return {clip, 0.0};
  return {raw, raw_bce_grad(b, y) / divisor};
}

double divisor_for(int y, const NPObjective& obj) {
  if (obj.conditioning == Conditioning::prior_weighted) return 1.0;
  const double f = std::clamp(obj.constraint_class_freq, kMinClassFreq, 1.0 - kMinClassFreq);
  return y == obj.constraint_class ? f : 1.0 - f;
}

Gated main_term(double b, int y, const NPObjective& obj) {
  check_prediction(b);
  check_label(y);
  if (y == obj.constraint_class) return {0.0, 0.0};
  return scaled_clipped_bce(b, y, divisor_for(y, obj), obj.loss_clip);
}

Gated constraint_term(double b, int y, const NPObjective& obj) {
  check_prediction(b);
  check_label(y);
  if (y != obj.constraint_class) return {0.0, 0.0};
  return scaled_clipped_bce(b, y, divisor_for(y, obj), obj.loss_clip);
}

}  // namespace

void NPObjective::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(loss_clip >= 1.0)) throw std::invalid_argument("loss_clip must be >= 1");
  check_label(constraint_class);
}

void NPObjective::resolve_bounds(double lambda_max) {
  if (g1 <= 0.0) g1 = loss_clip * std::max(1.0, lambda_max);
  if (g2 <= 0.0) g2 = loss_clip;
}

double clipped_bce(double b, int y, double loss_clip) {
  check_prediction(b);
  check_label(y);
  return scaled_clipped_bce(b, y, 1.0, loss_clip).value;
}

double clipped_bce_grad(double b, int y, double loss_clip) {
  check_prediction(b);
  check_label(y);
  return scaled_clipped_bce(b, y, 1.0, loss_clip).grad;
}

double main_loss(double b, int y, const NPObjective& obj) { return main_term(b, y, obj).value; }

double constraint_loss(double b, int y, const NPObjective& obj) {
  return constraint_term(b, y, obj).value;
}

double instantaneous_lagrangian(double b, double lambda, int y, const NPObjective& obj) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  return main_loss(b, y, obj) + lambda * (constraint_loss(b, y, obj) - obj.gamma);
}

double grad_b(double b, double lambda, int y, const NPObjective& obj) {
  return main_term(b, y, obj).grad + lambda * constraint_term(b, y, obj).grad;
}

double grad_lambda(double b, int y, const NPObjective& obj) {
  return constraint_loss(b, y, obj) - obj.gamma;
}

}  // namespace dmeg
