#include "treebert/embedding.hpp"

#include "treebert/errors.hpp"
#include "treebert/position.hpp"

#include <algorithm>
#include <set>

namespace treebert {

TypeVocab::TypeVocab(const std::vector<std::string>& names) {
  names_.emplace_back(kUnknownType);
  for (const auto& n : names)
    if (n != kUnknownType) names_.push_back(n);
  for (std::size_t i = 0; i < names_.size(); ++i) ids_.emplace(names_[i], static_cast<int>(i));
}

int TypeVocab::id(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  return it == ids_.end() ? 0 : it->second;
}

TypeVocab TypeVocab::from_paths(const std::vector<std::vector<NodePath>>& path_sets) {
  std::set<std::string> names;
  for (const auto& set : path_sets)
    for (const auto& path : set)
      for (const auto& node : path.nodes)
        if (!embeds_as_subtokens(node)) names.insert(node.label);
  return TypeVocab(std::vector<std::string>(names.begin(), names.end()));
}

const std::vector<int>& SplitCache::split(const std::string& token) {
  auto it = cache_.find(token);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(token, split_token(*vocab_, token)).first->second;
}

Eigen::RowVectorXd token_vector(const EmbeddingTables& tables, const SubtokenVocab& vocab, std::string_view token) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(tables.width());
  for (int id : split_token(vocab, token)) v += tables.subtokens->value.row(id);
  return v;
}

bool embeds_as_subtokens(const PathNode& node) { return node.is_value || is_special_token(node.label); }

PositionedPathMatrix build_path_matrix(const NodePath& path, const EmbeddingTables& tables,
                                       const SubtokenVocab& vocab, const TypeVocab& types, int max_nodes,
                                       PositionMode mode) {
  if (path.length() > max_nodes) throw ShapeMismatch("path longer than max_nodes");
  PositionedPathMatrix out;
  out.values = ad::Matrix::Zero(max_nodes, tables.width());
  out.pad_mask.assign(static_cast<std::size_t>(max_nodes), true);
  for (int k = 0; k < path.length(); ++k) {
    const PathNode& node = path.nodes[static_cast<std::size_t>(k)];
    Eigen::RowVectorXd row = embeds_as_subtokens(node) ? token_vector(tables, vocab, node.label)
                                                       : Eigen::RowVectorXd(tables.types->value.row(types.id(node.label)));
    if (mode == PositionMode::tree) {
      const auto ancestry = path.ancestry(k);
      row += position_coefficients(ancestry, tables.max_height()) * tables.levels->value;
    } else {
      row += tables.learned_positions->value.row(k);
    }
    out.values.row(k) = row;
    out.pad_mask[static_cast<std::size_t>(k)] = false;
  }
  return out;
}

PathSetFeatures featurize_paths(const std::vector<NodePath>& paths, SplitCache& splits, const TypeVocab& types,
                                int max_nodes, int max_height) {
  PathSetFeatures f;
  f.num_paths = static_cast<int>(paths.size());
  f.max_nodes = max_nodes;
  const std::size_t slots = paths.size() * static_cast<std::size_t>(max_nodes);
  f.subtoken_bags.resize(slots);
  f.type_bags.resize(slots);
  f.slot_bags.resize(slots);
  f.position_coefficients = ad::Matrix::Zero(static_cast<Eigen::Index>(slots), max_height + 1);
  f.path_valid.assign(paths.size(), true);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const NodePath& path = paths[p];
    if (path.length() > max_nodes) throw ShapeMismatch("path longer than max_nodes");
    for (int k = 0; k < path.length(); ++k) {
      const std::size_t slot = p * static_cast<std::size_t>(max_nodes) + static_cast<std::size_t>(k);
      const PathNode& node = path.nodes[static_cast<std::size_t>(k)];
      if (embeds_as_subtokens(node))
        f.subtoken_bags[slot] = splits.split(node.label);
      else
        f.type_bags[slot] = {types.id(node.label)};
      f.slot_bags[slot] = {k};
      const auto ancestry = path.ancestry(k);
      f.position_coefficients.row(static_cast<Eigen::Index>(slot)) = position_coefficients(ancestry, max_height);
    }
  }
  return f;
}

void append_padding_path(PathSetFeatures& f) {
  const auto extra = static_cast<std::size_t>(f.max_nodes);
  f.subtoken_bags.resize(f.subtoken_bags.size() + extra);
  f.type_bags.resize(f.type_bags.size() + extra);
  f.slot_bags.resize(f.slot_bags.size() + extra);
  ad::Matrix coef = ad::Matrix::Zero(f.position_coefficients.rows() + f.max_nodes, f.position_coefficients.cols());
  coef.topRows(f.position_coefficients.rows()) = f.position_coefficients;
  f.position_coefficients = std::move(coef);
  f.path_valid.push_back(false);
  ++f.num_paths;
}

ad::Var embed_paths(ad::Graph& g, const EmbeddingTables& tables, const PathSetFeatures& f, PositionMode mode) {
  ad::Var nodes = g.add(g.embedding_bag(g.param(*tables.subtokens), f.subtoken_bags),
                        g.embedding_bag(g.param(*tables.types), f.type_bags));
  ad::Var positions;
  if (mode == PositionMode::tree) {
    if (f.position_coefficients.cols() != tables.levels->value.rows())
      throw ShapeMismatch("position coefficients do not match level table height");
    positions = g.matmul(g.constant(f.position_coefficients), g.param(*tables.levels));
  } else {
    if (!tables.learned_positions) throw ShapeMismatch("learned position table missing");
    positions = g.embedding_bag(g.param(*tables.learned_positions), f.slot_bags);
  }
  return g.reshape(g.add(nodes, positions), f.num_paths, static_cast<Eigen::Index>(f.max_nodes) * tables.width());
}

}  // namespace treebert
