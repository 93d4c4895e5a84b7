#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace treebert {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// One JSON value per non-blank line. Throws SchemaError naming the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace treebert
