#pragma once

#include <filesystem>

#include "pairsim/params.hpp"

namespace pairsim {

// Flat binary archive: "PSCK" magic, u32 version, u64 entry count, then per
// parameter: name, shape, raw little-endian float32 data. Round-trips
// bit-exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_parameters(const std::filesystem::path& path, const ParameterMap& params);

// Fills the existing parameters by name. Throws FormatError on bad
// magic/version or missing/extra names, DimensionError on shape mismatch.
void load_parameters(const std::filesystem::path& path, ParameterMap& params);

}  // namespace pairsim
