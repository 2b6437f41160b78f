#include "dmeg/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dmeg/hedge.hpp"
#include "dmeg/objectives.hpp"

namespace dmeg {
namespace {

DenseLayer make_layer(std::size_t in_dim, std::size_t out_dim, Activation act, double limit,
                      std::mt19937_64& rng) {
  DenseLayer layer;
  layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim));
  layer.activation = act;
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
  }
  return layer;
}

LayerGradient zeros_like(const DenseLayer& layer) {
  return {Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
          Eigen::VectorXd::Zero(layer.bias.size())};
}

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_finite(const LayerGradient& g, const std::string& name) {
  if (!g.weights.allFinite()) throw std::invalid_argument("non-finite gradient in " + name + ".weights");
  if (!g.bias.allFinite()) throw std::invalid_argument("non-finite gradient in " + name + ".bias");
}

void nesterov(DenseLayer& layer, const LayerGradient& g, LayerGradient& v, double lr, double mu) {
  v.weights = mu * v.weights - lr * g.weights;
  layer.weights += mu * v.weights - lr * g.weights;
  v.bias = mu * v.bias - lr * g.bias;
  layer.bias += mu * v.bias - lr * g.bias;
}

void check_shapes(const HedgedNetwork& net, const ForwardTrace& trace) {
  const std::size_t L = net.depth();
  if (net.heads.size() != L || trace.layer_activations.size() != L ||
      trace.expert_probs.size() != L || trace.head_logits.size() != L ||
      trace.logit_clamped.size() != L ||
      static_cast<std::size_t>(trace.input.size()) != net.input_dim) {
    throw std::invalid_argument("forward trace does not match network shape");
  }
  for (std::size_t k = 0; k < L; ++k) {
    if (static_cast<std::size_t>(trace.layer_activations[k].size()) != net.trunk[k].out_dim()) {
      throw std::invalid_argument("forward trace activation " + std::to_string(k) +
                                  " does not match network shape");
    }
  }
}

}  // namespace

std::size_t HedgedNetwork::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : trunk) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  for (const auto& l : heads) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

HedgedNetwork init_network(std::size_t input_dim, std::size_t hidden_dim, std::size_t depth,
                           std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0 || depth == 0) {
    throw std::invalid_argument("init_network: input_dim, hidden_dim and depth must be positive");
  }
  std::mt19937_64 rng(seed);
  HedgedNetwork net;
  net.input_dim = input_dim;
  net.trunk.reserve(depth);
  net.heads.reserve(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t fan_in = k == 0 ? input_dim : hidden_dim;
    net.trunk.push_back(make_layer(fan_in, hidden_dim, Activation::relu,
                                   std::sqrt(6.0 / static_cast<double>(fan_in)), rng));
    net.heads.push_back(make_layer(hidden_dim, 1, Activation::identity,
                                   std::sqrt(6.0 / static_cast<double>(hidden_dim)), rng));
  }
  return net;
}

void forward_into(const HedgedNetwork& net, std::span<const double> x, ForwardTrace& trace) {
  if (x.size() != net.input_dim) {
    throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) +
                                ", network expects " + std::to_string(net.input_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");
  }
  const std::size_t L = net.depth();
  trace.input = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  trace.layer_activations.resize(L);
  trace.head_logits.resize(L);
  trace.logit_clamped.resize(L);
  trace.expert_probs.resize(L);

  for (std::size_t k = 0; k < L; ++k) {
    const DenseLayer& layer = net.trunk[k];
    const Eigen::VectorXd& in = k == 0 ? trace.input : trace.layer_activations[k - 1];
    Eigen::VectorXd& out = trace.layer_activations[k];
    out.noalias() = layer.weights * in;
    out += layer.bias;
    if (layer.activation == Activation::relu) out = out.cwiseMax(0.0);

    const DenseLayer& head = net.heads[k];
    const double raw = head.weights.row(0).dot(out) + head.bias[0];
    const bool clamped = raw > kLogitClamp || raw < -kLogitClamp;
    const double z = clamped ? (raw > 0 ? kLogitClamp : -kLogitClamp) : raw;
    trace.head_logits[k] = z;
    trace.logit_clamped[k] = clamped;
    trace.expert_probs[k] = logistic(z);
  }
}

ForwardTrace forward(const HedgedNetwork& net, std::span<const double> x) {
  ForwardTrace trace;
  forward_into(net, x, trace);
  return trace;
}

Gradients zero_gradients(const HedgedNetwork& net) {
  Gradients g;
  for (const auto& l : net.trunk) g.trunk.push_back(zeros_like(l));
  for (const auto& l : net.heads) g.heads.push_back(zeros_like(l));
  return g;
}

void backward_into(const HedgedNetwork& net, const ForwardTrace& trace,
                   std::span<const double> head_sensitivity, Gradients& grads) {
  check_shapes(net, trace);
  const std::size_t L = net.depth();
  if (head_sensitivity.size() != L) {
    throw std::invalid_argument("backward: sensitivity length does not match number of heads");
  }
  if (grads.trunk.size() != L || grads.heads.size() != L) grads = zero_gradients(net);

  Eigen::VectorXd upstream = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.hidden_dim()));
  for (std::size_t k = L; k-- > 0;) {
    const Eigen::VectorXd& act = trace.layer_activations[k];
    const double s = trace.expert_probs[k];
    // The clamp saturates the logit: no gradient flows past it.
    const double delta = trace.logit_clamped[k] ? 0.0 : head_sensitivity[k] * s * (1.0 - s);

    grads.heads[k].weights.row(0) = delta * act.transpose();
    grads.heads[k].bias[0] = delta;

    upstream += delta * net.heads[k].weights.row(0).transpose();
    const Eigen::VectorXd pre_grad = (act.array() > 0.0).select(upstream.array(), 0.0).matrix();

    const Eigen::VectorXd& in = k == 0 ? trace.input : trace.layer_activations[k - 1];
    grads.trunk[k].weights.noalias() = pre_grad * in.transpose();
    grads.trunk[k].bias = pre_grad;
    if (k > 0) upstream.noalias() = net.trunk[k].weights.transpose() * pre_grad;
  }
}

Gradients backward(const HedgedNetwork& net, const ForwardTrace& trace,
                   std::span<const double> head_sensitivity) {
  Gradients grads = zero_gradients(net);
  backward_into(net, trace, head_sensitivity, grads);
  return grads;
}

Gradients backward(const HedgedNetwork& net, const ForwardTrace& trace, const ExpertWeights& p,
                   double lambda, int y, const NPObjective& objective) {
  if (p.num_experts() != net.depth()) {
    throw std::invalid_argument("backward: expert weights do not match number of heads");
  }
  std::optional<double> art;
  if (p.includes_artificial()) art = artificial_prediction(objective.constraint_class);
  const double b = combine(p, trace.expert_probs, art);
  const double gb = grad_b(b, lambda, y, objective);
  std::vector<double> sens(p.expert_part().begin(), p.expert_part().end());
  for (double& v : sens) v *= gb;
  return backward(net, trace, sens);
}

OptimizerState make_optimizer(const HedgedNetwork& net, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  OptimizerState opt;
  for (const auto& l : net.trunk) opt.trunk_velocity.push_back(zeros_like(l));
  for (const auto& l : net.heads) opt.head_velocity.push_back(zeros_like(l));
  opt.learning_rate = learning_rate;
  opt.momentum = momentum;
  return opt;
}

void sgd_nesterov_step(HedgedNetwork& net, const Gradients& grads, OptimizerState& opt) {
  const std::size_t L = net.depth();
  if (grads.trunk.size() != L || grads.heads.size() != L || opt.trunk_velocity.size() != L ||
      opt.head_velocity.size() != L) {
    throw std::invalid_argument("sgd_nesterov_step: gradient/optimizer shape mismatch");
  }
  for (std::size_t k = 0; k < L; ++k) {
    check_finite(grads.trunk[k], "trunk." + std::to_string(k));
    check_finite(grads.heads[k], "head." + std::to_string(k));
  }
  for (std::size_t k = 0; k < L; ++k) {
    nesterov(net.trunk[k], grads.trunk[k], opt.trunk_velocity[k], opt.learning_rate, opt.momentum);
    nesterov(net.heads[k], grads.heads[k], opt.head_velocity[k], opt.learning_rate, opt.momentum);
  }
}

void backward_nesterov_step(HedgedNetwork& net, const ForwardTrace& trace,
                            std::span<const double> head_sensitivity, OptimizerState& opt) {
  check_shapes(net, trace);
  const std::size_t L = net.depth();
  if (head_sensitivity.size() != L || opt.trunk_velocity.size() != L || opt.head_velocity.size() != L) {
    throw std::invalid_argument("backward_nesterov_step: shape mismatch");
  }
  const double lr = opt.learning_rate;
  const double mu = opt.momentum;

  // Rank-one update of a col-major matrix: grad(r, c) = rows[r] * cols[c].
  const auto step_outer = [lr, mu](Eigen::MatrixXd& w, Eigen::MatrixXd& v, const Eigen::VectorXd& rows,
                                   const Eigen::VectorXd& cols) {
    const Eigen::Index n = w.rows();
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      double* __restrict wc = w.col(c).data();
      double* __restrict vc = v.col(c).data();
      const double* __restrict rg = rows.data();
      const double x = cols[c];
      for (Eigen::Index r = 0; r < n; ++r) {
        const double g = rg[r] * x;
        const double vr = mu * vc[r] - lr * g;
        vc[r] = vr;
        wc[r] += mu * vr - lr * g;
      }
    }
  };
  const auto step_vector = [lr, mu](Eigen::VectorXd& w, Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    for (Eigen::Index r = 0; r < w.size(); ++r) {
      const double vr = mu * v[r] - lr * g[r];
      v[r] = vr;
      w[r] += mu * vr - lr * g[r];
    }
  };

  Eigen::VectorXd upstream = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.hidden_dim()));
  Eigen::VectorXd pre_grad(upstream.size());
  Eigen::VectorXd head_delta(1);
  Eigen::VectorXd below(upstream.size());
  for (std::size_t k = L; k-- > 0;) {
    const Eigen::VectorXd& act = trace.layer_activations[k];
    const double s = trace.expert_probs[k];
    const double delta = trace.logit_clamped[k] ? 0.0 : head_sensitivity[k] * s * (1.0 - s);
    if (!std::isfinite(delta)) {
      throw std::invalid_argument("non-finite gradient in head." + std::to_string(k) + ".weights");
    }

    // Sensitivities use the parameters as they were in the forward pass.
    upstream += delta * net.heads[k].weights.row(0).transpose();
    pre_grad = (act.array() > 0.0).select(upstream.array(), 0.0).matrix();
    if (!pre_grad.allFinite()) {
      throw std::invalid_argument("non-finite gradient in trunk." + std::to_string(k) + ".weights");
    }
    const Eigen::VectorXd& in = k == 0 ? trace.input : trace.layer_activations[k - 1];
    if (k > 0) below.noalias() = net.trunk[k].weights.transpose() * pre_grad;

    head_delta[0] = delta;
    step_outer(net.heads[k].weights, opt.head_velocity[k].weights, head_delta, act);
    step_vector(net.heads[k].bias, opt.head_velocity[k].bias, head_delta);
    step_outer(net.trunk[k].weights, opt.trunk_velocity[k].weights, pre_grad, in);
    step_vector(net.trunk[k].bias, opt.trunk_velocity[k].bias, pre_grad);

    if (k > 0) upstream.swap(below);
  }
}

std::vector<std::string> parameter_names(const HedgedNetwork& net) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    names.push_back("trunk." + std::to_string(k) + ".weights");
    names.push_back("trunk." + std::to_string(k) + ".bias");
    names.push_back("head." + std::to_string(k) + ".weights");
    names.push_back("head." + std::to_string(k) + ".bias");
  }
  return names;
}

}  // namespace dmeg
