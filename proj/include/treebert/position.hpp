#pragma once

#include "treebert/ast.hpp"
#include "treebert/autodiff.hpp"
#include "treebert/paths.hpp"

#include <span>
#include <vector>

namespace treebert {

/// Exact mixing weights for the i-th of c children:
/// parent weight (c-i+1)/(c+1), level weight i/(c+1).
struct ChildWeights {
  int parent_numerator;
  int level_numerator;
  int denominator;

  double parent_weight() const noexcept { return static_cast<double>(parent_numerator) / denominator; }
  double level_weight() const noexcept { return static_cast<double>(level_numerator) / denominator; }
};

/// Requires 1 <= index <= siblings.
ChildWeights child_weights(int index, int siblings);

/// Row vector of length max_height+1 expressing a node's position embedding as
/// a combination of level-embedding rows. The root is row 0 exactly.
/// Throws HeightExceeded when the ancestry is deeper than max_height.
Eigen::RowVectorXd position_coefficients(std::span<const ChildSlot> ancestry, int max_height);

/// Position embedding of every node in preorder, computed by the parent/level
/// recursion directly on `level_matrix` rows ((H_max+1) x d).
/// Throws HeightExceeded when tree.height() > H_max.
std::vector<Eigen::RowVectorXd> node_position_embeddings(const AstTree& tree, const ad::Matrix& level_matrix);

/// Learnable scalars of the position scheme: (H_max + 1) * d_node.
inline long position_parameter_count(int max_height, int d_node) {
  return static_cast<long>(max_height + 1) * d_node;
}

}  // namespace treebert
