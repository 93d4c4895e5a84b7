#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace treebert {

/// One AST node. A node with no children is a terminal and must carry a value.
/// Non-terminals normally have only a type; a non-terminal that does carry a
/// value (function names) is rendered by that value.
struct AstNode {
  std::string type_name;
  std::optional<std::string> value;
  std::vector<AstNode> children;

  bool is_terminal() const noexcept { return children.empty(); }
  bool renders_value() const noexcept { return value.has_value(); }
  /// Label used in paths: the value attribute when present, otherwise the type.
  const std::string& label() const noexcept { return value ? *value : type_name; }
};

AstNode make_node(std::string type_name, std::vector<AstNode> children = {});
AstNode make_leaf(std::string type_name, std::string value);

/// Validated, immutable tree with cached height (root at level 0) and size.
class AstTree {
 public:
  /// Throws SchemaError when a terminal has no value.
  explicit AstTree(AstNode root);

  const AstNode& root() const noexcept { return root_; }
  int height() const noexcept { return height_; }
  int node_count() const noexcept { return node_count_; }
  int terminal_count() const noexcept { return terminal_count_; }

 private:
  AstNode root_;
  int height_ = 0;
  int node_count_ = 0;
  int terminal_count_ = 0;
};

/// Parses the JSON interchange format {"type", "value"?, "children"?}.
/// Throws SchemaError naming the offending node, e.g. "$.children[1]".
AstTree load_ast_json(std::string_view bytes);
AstTree ast_from_json(const nlohmann::json& j);
nlohmann::json ast_to_json(const AstNode& node);

}  // namespace treebert
