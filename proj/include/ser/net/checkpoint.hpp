#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ser/net/tensor.hpp"

namespace ser::net {

// Named-tensor container: magic "SERM", u32 version, u32 tensor count, then
// per tensor u32 name length, name bytes, u32 rank, u32 dims, f32 values.
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const ParameterSet<float>& params);
// Copies stored values into `params`; names and shapes must match exactly.
void decode_checkpoint_into(std::span<const unsigned char> bytes, ParameterSet<float>& params,
                            const std::string& label = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params);
void load_checkpoint(const std::filesystem::path& path, ParameterSet<float>& params);

}  // namespace ser::net
