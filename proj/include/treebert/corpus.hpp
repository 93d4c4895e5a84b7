#pragma once

#include "treebert/paths.hpp"
#include "treebert/tokenizer.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace treebert {

/// One ingested snippet: its code tokens and the path set of its AST.
struct CorpusRecord {
  std::string id;
  Language language = Language::python;
  std::vector<std::string> code;
  PathSet paths;
};

/// Path arrays as stored in JSONL files: labels, value flags and ancestry chains.
nlohmann::json paths_to_json(const std::vector<NodePath>& paths);
nlohmann::json kinds_to_json(const std::vector<NodePath>& paths);
nlohmann::json chains_to_json(const std::vector<NodePath>& paths);
std::vector<NodePath> paths_from_json(const nlohmann::json& labels, const nlohmann::json& kinds,
                                      const nlohmann::json& chains);

nlohmann::json record_to_json(const CorpusRecord& record);
CorpusRecord record_from_json(const nlohmann::json& j);

}  // namespace treebert
