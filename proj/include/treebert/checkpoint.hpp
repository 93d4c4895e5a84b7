#pragma once

#include "treebert/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace treebert {

/// Binary checkpoint container:
///   "TBCKPT01" | u32 version | u64 header length | JSON header | tensors
/// The header holds the model config, the three vocabularies, free-form
/// metadata and the name and shape of every parameter in registration order;
/// tensors follow as row-major little-endian float32.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const TreeBertModel& model, const nlohmann::json& meta = {});
TreeBertModel deserialize_checkpoint(const std::string& bytes, nlohmann::json* meta = nullptr);

void save_checkpoint(const std::filesystem::path& path, const TreeBertModel& model, const nlohmann::json& meta = {});
TreeBertModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace treebert
