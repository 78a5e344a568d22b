#pragma once

// Binary checkpoint, all integers and reals little-endian:
//
//   "GTCN"                   magic
//   u32 version              = kCheckpointVersion
//   u32 len, bytes[len]      model config as "key = value" text
//   u32 count                number of parameters
//   count x {
//     u32 len, bytes[len]    name
//     u32 rank, u64 dims[rank]
//     f64 values[prod(dims)]
//   }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graphtcn/config.hpp"
#include "graphtcn/model.hpp"
#include "graphtcn/params.hpp"

namespace gtcn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ParameterStore params;
};

std::vector<std::uint8_t> serialize_checkpoint(const ParameterStore& params, const ModelConfig& config);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const ModelConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds a model from a checkpoint; parameter names and shapes must match the config.
GraphTcn model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace gtcn
