#include "dmeg/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "dmeg/error.hpp"
#include "dmeg/hedge.hpp"
#include "dmeg/objectives.hpp"
#include "dmeg/seeding.hpp"
#include "dmeg/stream.hpp"

namespace dmeg {
namespace {

using Clock = std::chrono::steady_clock;

// Velocities under a long run of zero gradients decay into subnormals, which
// are two orders of magnitude slower on x86. Flush them for the loop's duration.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE2__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE2__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
};

StreamSpec seeded_stream(const ExperimentConfig& cfg) {
  StreamSpec spec = cfg.stream;
  spec.seed = derive_seed(cfg.seed, "stream");
  return spec;
}

// Running estimate of P(y = constraint_class) with add-one smoothing.
struct ClassFrequency {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  double observe(int y, int constraint_class) {
    hits += y == constraint_class;
    ++total;
    return (static_cast<double>(hits) + 1.0) / (static_cast<double>(total) + 2.0);
  }
};

void start_log(MetricsLog& log, const ExperimentConfig& cfg, const std::string& algorithm,
               const std::string& label) {
  log.algorithm = algorithm;
  log.label = label;
  log.gamma = cfg.objective.gamma;
  log.seed = cfg.seed;
  log.config = config_to_json(cfg);
  log.config_hash = config_hash(cfg);
}

[[noreturn]] void numeric_abort(std::uint64_t round, const std::string& what) {
  throw NumericError("numeric abort at round " + std::to_string(round) + ": " + what);
}

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

MetricsLog run_hedged(const ExperimentConfig& cfg, const LearnerOptions& opts, HedgedNetwork* final_net) {
  const auto started = Clock::now();
  const FlushDenormals ftz;
  validate(cfg);
  MetricsLog log;
  start_log(log, cfg, opts.algorithm, opts.label);

  const StreamSpec spec = seeded_stream(cfg);
  auto stream = make_stream(spec);
  const std::size_t dim = stream->dim();
  HedgedNetwork net = init_network(dim, cfg.hidden_dim, opts.depth, derive_seed(cfg.seed, "net"));

  NPObjective obj = cfg.objective;
  obj.resolve_bounds(cfg.lambda_max);
  const int cc = obj.constraint_class;

  double eta = cfg.eta;
  double eta_lambda = cfg.eta_lambda;
  if (cfg.rate_mode == RateMode::theorem) {
    if (spec.length == 0) throw ConfigError("theorem rates need a known stream length");
    const RateSchedule r =
        theorem_rates(obj.g1, obj.g2, static_cast<long long>(spec.length), opts.depth);
    eta = r.eta;
    eta_lambda = r.eta_lambda;
  }

  const bool artificial = cfg.artificial_expert && opts.constrained && !opts.freeze_last_head;
  const std::optional<double> art_pred =
      artificial ? std::optional<double>(artificial_prediction(cc)) : std::nullopt;
  ExpertWeights weights(opts.depth, eta, artificial);
  if (opts.freeze_last_head) weights.freeze_on(weights.size() - 1);
  DualVariable dual(cfg.lambda_max, eta_lambda);
  OptimizerState opt = make_optimizer(net, opts.learning_rate, cfg.momentum);
  Normalizer normalizer(dim);
  ClassFrequency freq;

  log.includes_artificial = artificial;
  log.initial_p.assign(weights.p().begin(), weights.p().end());
  log.initial_lambda = opts.constrained ? dual.lambda() : 0.0;
  MetricsRecorder recorder(log, cfg.window, cc, opts.depth, true);

  ForwardTrace trace;
  std::vector<double> sensitivity(opts.depth);
  std::vector<double> p_now;

  std::uint64_t round = 0;
  const std::uint64_t horizon = spec.length;
  while (horizon == 0 || round < horizon) {
    auto sample = stream->next();
    if (!sample) break;
    ++round;
    const Sample x = cfg.normalize ? normalizer.normalize(*sample) : std::move(*sample);

    forward_into(net, x.features, trace);
    const double b = combine(weights, trace.expert_probs, art_pred);
    if (!std::isfinite(b)) numeric_abort(round, "hedged prediction is not finite");
    recorder.commit(b >= 0.5 ? 1 : 0, trace.expert_probs);

    // Label revealed from here on.
    const int y = x.label;
    if (obj.conditioning == Conditioning::class_normalized) {
      obj.constraint_class_freq = freq.observe(y, cc);
    }
    const double lambda_t = opts.constrained ? dual.lambda() : 0.0;
    const double cl = constraint_loss(b, y, obj);
    const double gb = opts.constrained ? grad_b(b, lambda_t, y, obj)
                                       : clipped_bce_grad(b, y, obj.loss_clip);

    const auto played = weights.expert_part();
    for (std::size_t k = 0; k < sensitivity.size(); ++k) sensitivity[k] = played[k] * gb;

    weights.update(grad_p(gb, trace.expert_probs, art_pred, obj.g1));
    if (opts.constrained) {
      dual.update(std::clamp(grad_lambda(b, y, obj), -obj.g2, obj.g2));
    }

    try {
      backward_nesterov_step(net, trace, sensitivity, opt);
    } catch (const std::invalid_argument& e) {
      numeric_abort(round, e.what());
    }

    p_now.assign(weights.p().begin(), weights.p().end());
    recorder.reveal(y, cl, opts.constrained ? dual.lambda() : 0.0, p_now);
  }

  p_now.assign(weights.p().begin(), weights.p().end());
  recorder.finish(opts.constrained ? dual.lambda() : 0.0, p_now);
  if (log.rounds > 0 && opts.constrained) {
    log.certificate = constraint_certificate(obj.g1, obj.g2, static_cast<long long>(log.rounds),
                                             opts.depth, obj.gamma);
  }
  if (final_net) *final_net = std::move(net);
  log.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return log;
}

MetricsLog run_dmeg(const ExperimentConfig& cfg, HedgedNetwork* final_net) {
  LearnerOptions opts;
  opts.depth = cfg.depth;
  opts.learning_rate = cfg.learning_rate;
  return run_hedged(cfg, opts, final_net);
}

MetricsLog run_dmeg_unconstrained(const ExperimentConfig& cfg, HedgedNetwork* final_net) {
  LearnerOptions opts;
  opts.constrained = false;
  opts.depth = cfg.depth;
  opts.learning_rate = cfg.learning_rate;
  opts.algorithm = opts.label = "dmeg_unconstrained";
  return run_hedged(cfg, opts, final_net);
}

std::vector<MetricsLog> run_baseline_bl(const ExperimentConfig& cfg) {
  std::vector<MetricsLog> runs;
  for (std::size_t d : cfg.bl_depths) {
    if (d < 2) throw ConfigError("BL depth must be >= 2");
    LearnerOptions opts;
    opts.constrained = false;
    opts.freeze_last_head = true;
    opts.depth = d - 1;
    opts.learning_rate = cfg.bl_learning_rate.value_or(cfg.learning_rate);
    opts.algorithm = "bl";
    opts.label = "bl_depth" + std::to_string(d);
    runs.push_back(run_hedged(cfg, opts));
  }
  return runs;
}

std::size_t best_bl_index(const std::vector<MetricsLog>& runs) {
  if (runs.empty()) throw std::invalid_argument("best_bl_index: no runs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].overall.error_rate() < runs[best].overall.error_rate()) best = i;
  }
  return best;
}

MetricsLog run_baseline_mol(const ExperimentConfig& cfg, bool constrained) {
  const auto started = Clock::now();
  validate(cfg);
  MetricsLog log;
  start_log(log, cfg, constrained ? "mol" : "mol_unconstrained", constrained ? "mol" : "mol_unconstrained");

  const StreamSpec spec = seeded_stream(cfg);
  auto stream = make_stream(spec);
  const std::size_t dim = stream->dim();

  NPObjective obj = cfg.objective;
  obj.resolve_bounds(cfg.lambda_max);
  const int cc = obj.constraint_class;

  std::vector<double> w(dim, 0.0);
  double bias = 0.0;
  DualVariable dual(cfg.lambda_max, cfg.eta_lambda);
  Normalizer normalizer(dim);
  ClassFrequency freq;

  log.initial_p = {1.0};
  log.initial_lambda = 0.0;
  MetricsRecorder recorder(log, cfg.window, cc, 1, true);
  std::vector<double> probs(1);
  const std::vector<double> p_single{1.0};

  std::uint64_t round = 0;
  while (spec.length == 0 || round < spec.length) {
    auto sample = stream->next();
    if (!sample) break;
    ++round;
    const Sample x = cfg.normalize ? normalizer.normalize(*sample) : std::move(*sample);

    double raw = bias;
    for (std::size_t i = 0; i < dim; ++i) raw += w[i] * x.features[i];
    const bool clamped = std::abs(raw) > kLogitClamp;
    const double z = std::clamp(raw, -kLogitClamp, kLogitClamp);
    const double b = logistic(z);
    if (!std::isfinite(b)) numeric_abort(round, "MOL prediction is not finite");
    probs[0] = b;
    recorder.commit(b >= 0.5 ? 1 : 0, probs);

    const int y = x.label;
    if (obj.conditioning == Conditioning::class_normalized) {
      obj.constraint_class_freq = freq.observe(y, cc);
    }
    const double lambda_t = constrained ? dual.lambda() : 0.0;
    const double cl = constraint_loss(b, y, obj);
    const double gb = constrained ? grad_b(b, lambda_t, y, obj) : clipped_bce_grad(b, y, obj.loss_clip);
    const double gz = clamped ? 0.0 : gb * b * (1.0 - b);
    for (std::size_t i = 0; i < dim; ++i) w[i] -= cfg.eta * gz * x.features[i];
    bias -= cfg.eta * gz;
    if (constrained) dual.update(std::clamp(grad_lambda(b, y, obj), -obj.g2, obj.g2));
    if (!std::isfinite(bias)) numeric_abort(round, "MOL weights are not finite");

    recorder.reveal(y, cl, constrained ? dual.lambda() : 0.0, p_single);
  }
  recorder.finish(constrained ? dual.lambda() : 0.0, p_single);
  log.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return log;
}

std::vector<MetricsLog> run_gamma_sweep(const ExperimentConfig& cfg, unsigned jobs) {
  std::vector<ExperimentConfig> configs;
  for (double g : cfg.gamma_sweep) {
    ExperimentConfig c = cfg;
    c.algorithm = Algorithm::dmeg;
    c.objective.gamma = g;
    configs.push_back(c);
  }
  std::vector<MetricsLog> logs(configs.size());
  if (jobs <= 1 || configs.size() <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) logs[i] = run_dmeg(configs[i]);
    return logs;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(configs.size());
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<std::size_t>(jobs, configs.size()); ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        try {
          logs[i] = run_dmeg(configs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return logs;
}

std::vector<MetricsLog> run_algorithm(const ExperimentConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::dmeg: return {run_dmeg(cfg)};
    case Algorithm::dmeg_unconstrained: return {run_dmeg_unconstrained(cfg)};
    case Algorithm::bl: return run_baseline_bl(cfg);
    case Algorithm::mol: return {run_baseline_mol(cfg)};
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace dmeg
