#pragma once

#include "treebert/autodiff.hpp"
#include "treebert/bpe.hpp"
#include "treebert/paths.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treebert {

/// How node positions inside a path are encoded. `learned` is the ablation
/// baseline: one learned row per slot index within the path.
enum class PositionMode { tree, learned };

/// Whole-symbol vocabulary for AST type names. Id 0 is reserved for unknown types.
class TypeVocab {
 public:
  static constexpr std::string_view kUnknownType = "[UNK_TYPE]";

  TypeVocab() { names_.emplace_back(kUnknownType); }
  explicit TypeVocab(const std::vector<std::string>& names);

  int size() const noexcept { return static_cast<int>(names_.size()); }
  int id(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Type names of non-value nodes in `paths`, sorted.
  static TypeVocab from_paths(const std::vector<std::vector<NodePath>>& path_sets);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

/// Memoizing wrapper around split_token.
class SplitCache {
 public:
  explicit SplitCache(const SubtokenVocab& vocab) : vocab_(&vocab) {}
  const std::vector<int>& split(const std::string& token);
  const SubtokenVocab& vocab() const noexcept { return *vocab_; }

 private:
  const SubtokenVocab* vocab_;
  std::unordered_map<std::string, std::vector<int>> cache_;
};

/// Encoder-side embedding parameters.
struct EmbeddingTables {
  ad::Parameter* subtokens = nullptr;          // vocab_size x d_node
  ad::Parameter* types = nullptr;              // type_count x d_node
  ad::Parameter* levels = nullptr;             // (H_max + 1) x d_node
  ad::Parameter* learned_positions = nullptr;  // max_nodes x d_node, ablation only

  int width() const { return static_cast<int>(subtokens->value.cols()); }
  int max_height() const { return static_cast<int>(levels->value.rows()) - 1; }
};

/// Sum of the subtoken embedding rows of `token`.
Eigen::RowVectorXd token_vector(const EmbeddingTables& tables, const SubtokenVocab& vocab, std::string_view token);

/// One path laid out as max_nodes rows of node embedding + position embedding.
struct PositionedPathMatrix {
  ad::Matrix values;
  std::vector<bool> pad_mask;  // true for padding rows
};

/// A node is embedded from subtokens when it is value-rendered or carries a
/// special label such as [mask]; otherwise from the type table.
bool embeds_as_subtokens(const PathNode& node);

PositionedPathMatrix build_path_matrix(const NodePath& path, const EmbeddingTables& tables,
                                       const SubtokenVocab& vocab, const TypeVocab& types, int max_nodes,
                                       PositionMode mode = PositionMode::tree);

/// Model-ready description of a path set: embedding bags and position
/// coefficients for every one of num_paths * max_nodes slots.
struct PathSetFeatures {
  int num_paths = 0;
  int max_nodes = 0;
  std::vector<std::vector<int>> subtoken_bags;
  std::vector<std::vector<int>> type_bags;
  std::vector<std::vector<int>> slot_bags;
  ad::Matrix position_coefficients;  // slots x (H_max + 1)
  std::vector<bool> path_valid;
};

PathSetFeatures featurize_paths(const std::vector<NodePath>& paths, SplitCache& splits, const TypeVocab& types,
                                int max_nodes, int max_height);

/// Appends an all-padding path; used to exercise masking of padded paths.
void append_padding_path(PathSetFeatures& features);

/// Differentiable path embedding: num_paths x (max_nodes * d_node), rows of
/// concatenated node vectors.
ad::Var embed_paths(ad::Graph& g, const EmbeddingTables& tables, const PathSetFeatures& features,
                    PositionMode mode);

}  // namespace treebert
