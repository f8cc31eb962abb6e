#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "screensum/numcore/tensor.h"

namespace screensum::nc {

// Named-tensor container, little-endian:
//   magic "SSCKPT\0\0" | u32 version (=1)
//   u32 metadata count | (u32 len, key bytes, u32 len, value bytes)*
//   u32 tensor count | per tensor: u32 len, name | u32 rank | u64 dims[rank] | f64 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParameterSet params;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace screensum::nc
