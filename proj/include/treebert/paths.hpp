#pragma once

#include "treebert/ast.hpp"

#include <string>
#include <vector>

namespace treebert {

/// Position of a node among its parent's children: 1-based index out of
/// `siblings` children.
struct ChildSlot {
  int index = 1;
  int siblings = 1;
  friend bool operator==(const ChildSlot&, const ChildSlot&) = default;
};

struct PathNode {
  std::string label;
  /// True when the node is rendered by its value attribute (terminals and
  /// function names); such nodes are embedded as subtoken sums.
  bool is_value = false;
  friend bool operator==(const PathNode&, const PathNode&) = default;
};

/// Root-to-terminal sequence of rendered nodes.
///
/// `chain` keeps the full ancestry of the terminal, one slot per edge, even
/// when `nodes` was truncated; element k < length()-1 sits at tree level k and
/// the last element sits at level chain.size().
struct NodePath {
  std::vector<PathNode> nodes;
  std::vector<ChildSlot> chain;

  int length() const noexcept { return static_cast<int>(nodes.size()); }
  int level(int k) const noexcept {
    return k + 1 < length() ? k : static_cast<int>(chain.size());
  }
  /// Ancestry of element k: the first level(k) slots of the chain.
  std::vector<ChildSlot> ancestry(int k) const {
    return {chain.begin(), chain.begin() + level(k)};
  }
  friend bool operator==(const NodePath&, const NodePath&) = default;
};

/// Unordered collection of paths; `terminal_count` is the tree's terminal
/// count before max-path truncation.
struct PathSet {
  std::vector<NodePath> paths;
  int terminal_count = 0;
  friend bool operator==(const PathSet&, const PathSet&) = default;
};

/// One path per terminal, in left-to-right terminal order. Paths longer than
/// `max_nodes` keep their first max_nodes-1 nodes plus the terminal; only the
/// first `max_paths` paths are kept.
PathSet extract_paths(const AstTree& tree, int max_paths, int max_nodes);

}  // namespace treebert
