#pragma once

#include <cstdint>
#include <string_view>

namespace dmeg {

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Child seed for a named component. Independent of which other components
/// exist, so adding a run never shifts another run's randomness.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

}  // namespace dmeg
