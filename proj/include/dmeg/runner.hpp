#pragma once

// Online experiment loops. Each round: receive x_t, compute the expert
// predictions, play (p_t, lambda_t) and commit the hard prediction
// b_t >= 0.5, reveal y_t, then update p, lambda and the network weights.

#include <cstddef>
#include <optional>
#include <vector>

#include "dmeg/config.hpp"
#include "dmeg/metrics.hpp"
#include "dmeg/net.hpp"

namespace dmeg {

/// Knobs of the hedged-network loop that distinguish DMEG from its ablations.
struct LearnerOptions {
  /// Run the dual player; otherwise train on the plain clipped BCE.
  bool constrained = true;
  /// Put all hedge mass on the deepest head and never move it.
  bool freeze_last_head = false;
  std::size_t depth = 19;
  double learning_rate = 0.001;
  std::string algorithm = "dmeg";
  std::string label = "dmeg";
};

/// The hedged-network loop behind run_dmeg, dmeg_unconstrained and BL.
/// `final_net`, when given, receives the trained network.
MetricsLog run_hedged(const ExperimentConfig& cfg, const LearnerOptions& opts,
                      HedgedNetwork* final_net = nullptr);

MetricsLog run_dmeg(const ExperimentConfig& cfg, HedgedNetwork* final_net = nullptr);

/// DMEG without the dual player, trained on the plain BCE (HBP stand-in).
MetricsLog run_dmeg_unconstrained(const ExperimentConfig& cfg, HedgedNetwork* final_net = nullptr);

/// One plain network per entry of cfg.bl_depths (depth counts the output
/// layer, so depth d has d - 1 hidden layers), trained on the plain BCE.
std::vector<MetricsLog> run_baseline_bl(const ExperimentConfig& cfg);

/// Index of the BL run with the lowest overall error rate.
std::size_t best_bl_index(const std::vector<MetricsLog>& runs);

/// Logistic model on the raw features, gradient steps of size eta on the
/// instantaneous Lagrangian plus its own EG dual. With `constrained` false it
/// is plain online logistic regression.
MetricsLog run_baseline_mol(const ExperimentConfig& cfg, bool constrained = true);

/// One independent DMEG run per gamma in cfg.gamma_sweep. `jobs` > 1 runs
/// them on that many threads; results are identical either way.
std::vector<MetricsLog> run_gamma_sweep(const ExperimentConfig& cfg, unsigned jobs = 1);

/// Dispatches on cfg.algorithm.
std::vector<MetricsLog> run_algorithm(const ExperimentConfig& cfg);

}  // namespace dmeg
