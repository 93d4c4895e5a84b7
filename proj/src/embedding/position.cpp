#include "treebert/position.hpp"

#include "treebert/errors.hpp"

#include <stdexcept>

namespace treebert {

ChildWeights child_weights(int index, int siblings) {
  if (siblings < 1 || index < 1 || index > siblings)
    throw std::invalid_argument("child_weights: need 1 <= index <= siblings");
  return {siblings - index + 1, index, siblings + 1};
}

Eigen::RowVectorXd position_coefficients(std::span<const ChildSlot> ancestry, int max_height) {
  const int depth = static_cast<int>(ancestry.size());
  if (depth > max_height) throw HeightExceeded(depth, max_height);
  Eigen::RowVectorXd coef = Eigen::RowVectorXd::Zero(max_height + 1);
  coef(0) = 1.0;
  for (int level = 1; level <= depth; ++level) {
    const ChildSlot slot = ancestry[static_cast<std::size_t>(level - 1)];
    const ChildWeights w = child_weights(slot.index, slot.siblings);
    coef *= w.parent_weight();
    coef(level) += w.level_weight();
  }
  return coef;
}

namespace {

void recurse(const AstNode& node, int level, const Eigen::RowVectorXd& position, const ad::Matrix& levels,
             std::vector<Eigen::RowVectorXd>& out) {
  out.push_back(position);
  const int c = static_cast<int>(node.children.size());
  for (int i = 1; i <= c; ++i) {
    const ChildWeights w = child_weights(i, c);
    Eigen::RowVectorXd child = w.parent_weight() * position + w.level_weight() * levels.row(level + 1);
    recurse(node.children[static_cast<std::size_t>(i - 1)], level + 1, child, levels, out);
  }
}

}  // namespace

std::vector<Eigen::RowVectorXd> node_position_embeddings(const AstTree& tree, const ad::Matrix& level_matrix) {
  const int max_height = static_cast<int>(level_matrix.rows()) - 1;
  if (tree.height() > max_height) throw HeightExceeded(tree.height(), max_height);
  std::vector<Eigen::RowVectorXd> out;
  out.reserve(static_cast<std::size_t>(tree.node_count()));
  recurse(tree.root(), 0, level_matrix.row(0), level_matrix, out);
  return out;
}

}  // namespace treebert
