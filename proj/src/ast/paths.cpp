#include "treebert/paths.hpp"

#include <stdexcept>

namespace treebert {
namespace {

struct Walker {
  int max_paths;
  int max_nodes;
  PathSet out;
  std::vector<PathNode> prefix;
  std::vector<ChildSlot> chain;

  void visit(const AstNode& node) {
    prefix.push_back({node.label(), node.renders_value()});
    if (node.is_terminal()) {
      ++out.terminal_count;
      if (static_cast<int>(out.paths.size()) < max_paths) emit();
    } else {
      const int count = static_cast<int>(node.children.size());
      for (int i = 0; i < count; ++i) {
        chain.push_back({i + 1, count});
        visit(node.children[static_cast<std::size_t>(i)]);
        chain.pop_back();
      }
    }
    prefix.pop_back();
  }

  void emit() {
    NodePath path;
    path.chain = chain;
    if (static_cast<int>(prefix.size()) <= max_nodes) {
      path.nodes = prefix;
    } else {
      path.nodes.assign(prefix.begin(), prefix.begin() + (max_nodes - 1));
      path.nodes.push_back(prefix.back());
    }
    out.paths.push_back(std::move(path));
  }
};

}  // namespace

PathSet extract_paths(const AstTree& tree, int max_paths, int max_nodes) {
  if (max_paths < 1 || max_nodes < 1) throw std::invalid_argument("max_paths and max_nodes must be positive");
  Walker walker{max_paths, max_nodes, {}, {}, {}};
  walker.visit(tree.root());
  return std::move(walker.out);
}

}  // namespace treebert
