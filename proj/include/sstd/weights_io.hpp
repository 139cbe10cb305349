#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sstd/params.hpp"

namespace sstd {

// Binary model container. Fixed little-endian layout:
//   "SSTD" | version u32 | tensor count u32 |
//   per tensor: name length u32, name bytes, dims u32[4], f32 data
// Errors carry the byte offset of the problem.

inline constexpr std::uint32_t kWeightsVersion = 1;

std::vector<std::uint8_t> encode_weights(const ModelParams& params);
ModelParams decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const ModelParams& params, const std::string& path);
ModelParams load_weights(const std::string& path);

} // namespace sstd
