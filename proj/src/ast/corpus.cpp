#include "treebert/corpus.hpp"

#include "treebert/errors.hpp"

namespace treebert {

nlohmann::json paths_to_json(const std::vector<NodePath>& paths) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& n : p.nodes) labels.push_back(n.label);
    out.push_back(std::move(labels));
  }
  return out;
}

nlohmann::json kinds_to_json(const std::vector<NodePath>& paths) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json kinds = nlohmann::json::array();
    for (const auto& n : p.nodes) kinds.push_back(n.is_value ? 1 : 0);
    out.push_back(std::move(kinds));
  }
  return out;
}

nlohmann::json chains_to_json(const std::vector<NodePath>& paths) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json chain = nlohmann::json::array();
    for (const auto& s : p.chain) chain.push_back({s.index, s.siblings});
    out.push_back(std::move(chain));
  }
  return out;
}

std::vector<NodePath> paths_from_json(const nlohmann::json& labels, const nlohmann::json& kinds,
                                      const nlohmann::json& chains) {
  if (!labels.is_array() || !kinds.is_array() || !chains.is_array() || labels.size() != kinds.size() ||
      labels.size() != chains.size())
    throw SchemaError("$.paths", "paths, kinds and chains must be arrays of equal length");
  std::vector<NodePath> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string where = "$.paths[" + std::to_string(i) + "]";
    if (labels[i].size() != kinds[i].size() || labels[i].empty())
      throw SchemaError(where, "labels and kinds differ in length or are empty");
    for (std::size_t k = 0; k < labels[i].size(); ++k)
      out[i].nodes.push_back({labels[i][k].get<std::string>(), kinds[i][k].get<int>() != 0});
    for (const auto& slot : chains[i]) {
      const int index = slot.at(0).get<int>();
      const int siblings = slot.at(1).get<int>();
      if (index < 1 || index > siblings) throw SchemaError(where, "invalid chain slot");
      out[i].chain.push_back({index, siblings});
    }
    if (out[i].chain.size() + 1 < out[i].nodes.size())
      throw SchemaError(where, "chain shorter than path");
  }
  return out;
}

nlohmann::json record_to_json(const CorpusRecord& record) {
  nlohmann::json j;
  j["id"] = record.id;
  j["lang"] = std::string(language_tag(record.language));
  j["code"] = record.code;
  j["paths"] = paths_to_json(record.paths.paths);
  j["kinds"] = kinds_to_json(record.paths.paths);
  j["chains"] = chains_to_json(record.paths.paths);
  j["terminals"] = record.paths.terminal_count;
  return j;
}

CorpusRecord record_from_json(const nlohmann::json& j) {
  try {
    CorpusRecord r;
    r.id = j.value("id", std::string());
    r.language = parse_language(j.at("lang").get<std::string>());
    r.code = j.at("code").get<std::vector<std::string>>();
    r.paths.paths = paths_from_json(j.at("paths"), j.at("kinds"), j.at("chains"));
    r.paths.terminal_count = j.value("terminals", static_cast<int>(r.paths.paths.size()));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$", std::string("malformed corpus record: ") + e.what());
  }
}

}  // namespace treebert
