#pragma once

// Parameter checkpoints: a JSON document
//   {"format": "DMEG-CKPT-1", "input_dim": d, "tensors": [{"name", "shape", "values"}, ...]}
// with row-major values. Only the parameters are stored, not optimizer state.

#include <filesystem>
#include <string>

#include "dmeg/net.hpp"

namespace dmeg {

inline constexpr const char* kCheckpointMagic = "DMEG-CKPT-1";

std::string checkpoint_to_string(const HedgedNetwork& net);
HedgedNetwork checkpoint_from_string(const std::string& text);

void save_checkpoint(const HedgedNetwork& net, const std::filesystem::path& path);
HedgedNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace dmeg
