#include "treebert/ast.hpp"

#include "treebert/errors.hpp"

#include <algorithm>

namespace treebert {

AstNode make_node(std::string type_name, std::vector<AstNode> children) {
  return AstNode{std::move(type_name), std::nullopt, std::move(children)};
}

AstNode make_leaf(std::string type_name, std::string value) {
  return AstNode{std::move(type_name), std::move(value), {}};
}

namespace {

struct Stats {
  int height = 0;
  int nodes = 0;
  int terminals = 0;
};

void walk(const AstNode& node, int depth, const std::string& where, Stats& stats) {
  ++stats.nodes;
  stats.height = std::max(stats.height, depth);
  if (node.is_terminal()) {
    if (!node.value) throw SchemaError(where, "terminal node '" + node.type_name + "' has no value");
    ++stats.terminals;
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i)
    walk(node.children[i], depth + 1, where + ".children[" + std::to_string(i) + "]", stats);
}

AstNode node_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw SchemaError(where, "missing string field 'type'");
  AstNode node;
  node.type_name = type->get<std::string>();
  if (auto value = j.find("value"); value != j.end() && !value->is_null()) {
    if (!value->is_string()) throw SchemaError(where, "'value' must be a string");
    node.value = value->get<std::string>();
  }
  if (auto children = j.find("children"); children != j.end()) {
    if (!children->is_array()) throw SchemaError(where, "'children' must be an array");
    node.children.reserve(children->size());
    for (std::size_t i = 0; i < children->size(); ++i)
      node.children.push_back(
          node_from_json((*children)[i], where + ".children[" + std::to_string(i) + "]"));
  }
  if (node.is_terminal() && !node.value)
    throw SchemaError(where, "terminal node '" + node.type_name + "' has no value");
  return node;
}

}  // namespace

AstTree::AstTree(AstNode root) : root_(std::move(root)) {
  Stats stats;
  walk(root_, 0, "$", stats);
  height_ = stats.height;
  node_count_ = stats.nodes;
  terminal_count_ = stats.terminals;
}

AstTree ast_from_json(const nlohmann::json& j) { return AstTree(node_from_json(j, "$")); }

AstTree load_ast_json(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return ast_from_json(j);
}

nlohmann::json ast_to_json(const AstNode& node) {
  nlohmann::json j;
  j["type"] = node.type_name;
  if (node.value) j["value"] = *node.value;
  if (!node.children.empty()) {
    j["children"] = nlohmann::json::array();
    for (const auto& child : node.children) j["children"].push_back(ast_to_json(child));
  }
  return j;
}

}  // namespace treebert
