#pragma once

// Feed-forward ReLU trunk with a logistic classifier head on every hidden
// layer. Head k reads trunk layer k, so the network carries `depth` experts
// of increasing depth. Gradients are derived by hand for this architecture.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dmeg {

class ExpertWeights;
struct NPObjective;

enum class Activation { relu, identity };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Head logits are clamped to [-kLogitClamp, kLogitClamp] before the logistic.
inline constexpr double kLogitClamp = 30.0;

struct HedgedNetwork {
  std::size_t input_dim = 0;
  std::vector<DenseLayer> trunk;  // ReLU
  std::vector<DenseLayer> heads;  // identity, out_dim 1; heads[k] reads trunk[k]

  std::size_t depth() const { return trunk.size(); }
  std::size_t hidden_dim() const { return trunk.empty() ? 0 : trunk.front().out_dim(); }
  std::size_t num_parameters() const;
};

struct ForwardTrace {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> layer_activations;  // post-ReLU, one per trunk layer
  std::vector<double> head_logits;                  // after clamping
  std::vector<bool> logit_clamped;
  std::vector<double> expert_probs;
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct Gradients {
  std::vector<LayerGradient> trunk;
  std::vector<LayerGradient> heads;
};

struct OptimizerState {
  std::vector<LayerGradient> trunk_velocity;
  std::vector<LayerGradient> head_velocity;
  double learning_rate = 0.001;
  double momentum = 0.9;
};

/// Zero biases; every weight uniform in +-sqrt(6/fan_in) (variance
/// 2/fan_in). Deterministic in `seed`.
HedgedNetwork init_network(std::size_t input_dim, std::size_t hidden_dim, std::size_t depth,
                           std::uint64_t seed);

ForwardTrace forward(const HedgedNetwork& net, std::span<const double> x);
void forward_into(const HedgedNetwork& net, std::span<const double> x, ForwardTrace& trace);

/// Gradients of a scalar loss given its sensitivity to each expert probability,
/// head_sensitivity[k] = dl / dS^k.
Gradients backward(const HedgedNetwork& net, const ForwardTrace& trace,
                   std::span<const double> head_sensitivity);
void backward_into(const HedgedNetwork& net, const ForwardTrace& trace,
                   std::span<const double> head_sensitivity, Gradients& grads);

/// Gradients of the instantaneous Lagrangian l(<p, S(x)>, lambda, y).
Gradients backward(const HedgedNetwork& net, const ForwardTrace& trace, const ExpertWeights& p,
                   double lambda, int y, const NPObjective& objective);

Gradients zero_gradients(const HedgedNetwork& net);
OptimizerState make_optimizer(const HedgedNetwork& net, double learning_rate, double momentum);

/// Nesterov momentum in the velocity form
///   v <- momentum * v - lr * g ;  w <- w + momentum * v - lr * g
/// Throws std::invalid_argument naming the first tensor with a non-finite entry.
void sgd_nesterov_step(HedgedNetwork& net, const Gradients& grads, OptimizerState& opt);

/// backward() followed by sgd_nesterov_step() in a single pass over the
/// parameters, without materializing the gradient. Used by the online loop.
void backward_nesterov_step(HedgedNetwork& net, const ForwardTrace& trace,
                            std::span<const double> head_sensitivity, OptimizerState& opt);

/// Stable tensor names, e.g. "trunk.3.weights", "head.0.bias".
std::vector<std::string> parameter_names(const HedgedNetwork& net);

}  // namespace dmeg
