#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmeg/objectives.hpp"
#include "dmeg/stream.hpp"

namespace dmeg {

enum class Algorithm { dmeg, bl, mol, dmeg_unconstrained };

enum class RateMode { fixed, theorem };

struct ExperimentConfig {
  StreamSpec stream;
  bool normalize = true;

  std::size_t hidden_dim = 100;
  std::size_t depth = 19;

  NPObjective objective;

  RateMode rate_mode = RateMode::fixed;
  double eta = 0.01;
  double eta_lambda = 0.01;

  double lambda_max = 10.0;

  double learning_rate = 0.001;
  double momentum = 0.9;

  Algorithm algorithm = Algorithm::dmeg;
  std::vector<std::size_t> bl_depths{2, 3, 4, 8, 16};
  /// Learning rate of the BL baselines; falls back to `learning_rate` when unset.
  std::optional<double> bl_learning_rate;
  std::vector<double> gamma_sweep{0.15, 0.18, 0.21, 0.24, 0.27, 0.3};

  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::uint64_t window = 10000;
  bool artificial_expert = false;
  bool write_predictions = true;
  bool write_checkpoint = false;
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
std::string to_string(StreamKind k);
std::string to_string(Conditioning c);

/// Parses and validates a config document; absent keys take the defaults
/// above, unknown keys are rejected. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical document with every default made explicit.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// FNV-1a of the canonical document, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Throws ConfigError on out-of-range fields.
void validate(const ExperimentConfig& cfg);

}  // namespace dmeg
