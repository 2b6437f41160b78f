#pragma once

// Neyman-Pearson surrogate losses and the per-round Lagrangian
//
//   l(b, lambda, y) = main_loss(b, y) + lambda * (constraint_loss(b, y) - gamma)
//
// where b in [0, 1] is the hedged prediction (probability of class 1). Both
// surrogates are binary cross-entropy gated by label: the constraint loss
// only sees samples of `constraint_class`, the main loss only sees the rest.
// Each surrogate is clipped at `loss_clip`; past the clip its derivative is 0.

namespace dmeg {

enum class Conditioning {
  /// Indicator-gated losses (class-prior-scaled conditional risks).
  prior_weighted,
  /// Gated losses divided by a running class-frequency estimate.
  class_normalized,
};

struct NPObjective {
  double gamma = 0.2;
  int constraint_class = 1;
  Conditioning conditioning = Conditioning::prior_weighted;
  double loss_clip = 4.0;
  /// Bound on |dl/dp_k|. Non-positive means "derive from loss_clip and lambda_max".
  double g1 = 0.0;
  /// Bound on |dl/dlambda|. Non-positive means "derive from loss_clip".
  double g2 = 0.0;
  /// Running frequency of the constraint class; only read in class_normalized mode.
  double constraint_class_freq = 0.5;

  /// Throws std::invalid_argument when gamma, loss_clip or constraint_class are out of range.
  void validate() const;

  /// Fills g1 = loss_clip * max(1, lambda_max) and g2 = loss_clip where unset.
  void resolve_bounds(double lambda_max);
};

/// Clipped binary cross-entropy, ungated. This is the loss of the unconstrained learners.
double clipped_bce(double b, int y, double loss_clip);
double clipped_bce_grad(double b, int y, double loss_clip);

double main_loss(double b, int y, const NPObjective& obj);
double constraint_loss(double b, int y, const NPObjective& obj);
double instantaneous_lagrangian(double b, double lambda, int y, const NPObjective& obj);

/// d l / d b.
double grad_b(double b, double lambda, int y, const NPObjective& obj);

/// d l / d lambda = constraint_loss(b, y) - gamma.
double grad_lambda(double b, int y, const NPObjective& obj);

}  // namespace dmeg
