#pragma once

#include "treebert/corpus.hpp"
#include "treebert/paths.hpp"
#include "treebert/rng.hpp"
#include "treebert/tokenizer.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace treebert {

/// Node selection for encoder masking.
///  - level: weighted sampling without replacement by the level softmax
///  - topk: deterministic top-k of the level softmax (the k deepest nodes)
///  - random: uniform sampling without replacement (standard MLM)
///  - value_only: uniform among value-rendered nodes only
enum class MaskStrategy { level, topk, random, value_only };

MaskStrategy parse_mask_strategy(std::string_view name);
std::string_view mask_strategy_name(MaskStrategy strategy);

/// q_l = exp(l - L) / sum_j exp(j - L) for l = 1..L.
std::vector<double> mask_distribution(int path_length);

/// k = max(1, round(ratio * L)), never more than L.
int masked_count(int path_length, double mask_ratio);

/// 0-based indices of the nodes to mask, ascending.
std::vector<int> select_masked_nodes(const NodePath& path, double mask_ratio, Rng& rng,
                                     MaskStrategy strategy = MaskStrategy::level);

struct EncoderMask {
  std::vector<NodePath> masked_paths;
  std::vector<std::vector<int>> masked_indices;  // per path
  std::set<std::string> masked_labels;           // m^A, by rendered label
};

/// Masks each path independently; masked nodes keep their slot (and hence
/// their position embedding) but take the [mask] label.
EncoderMask apply_encoder_mask(const PathSet& paths, double mask_ratio, Rng& rng,
                               MaskStrategy strategy = MaskStrategy::level);

struct DecoderSide {
  std::vector<std::string> input;   // [LT], C with m^C replaced by [mask], [CLS]
  std::vector<std::string> target;  // C, [EOS]
};

/// m^C = tokens of C whose rendering is not in m^A.
/// Throws CodeTooLong when code.size() > max_code_length - 2.
DecoderSide build_decoder_side(const std::vector<std::string>& code, const std::set<std::string>& masked_labels,
                               Language language, int max_code_length);

struct NopResult {
  std::vector<NodePath> paths;
  int label = 0;
  bool no_swappable_path = false;  // corruption drawn but nothing could be swapped
  int path_index = -1;
  int first = -1;
  int second = -1;
};

/// With probability swap_prob, swaps two non-terminal nodes with different
/// labels inside one uniformly chosen path (label 1); otherwise returns the
/// paths unchanged (label 0).
NopResult apply_nop(std::vector<NodePath> paths, double swap_prob, Rng& rng);

struct CorruptionConfig {
  double mask_ratio = 0.15;
  double nop_prob = 0.5;
  MaskStrategy strategy = MaskStrategy::level;
  int max_code_length = 200;
};

struct TrainingExample {
  std::string id;
  Language language = Language::python;
  std::vector<NodePath> paths;         // uncorrupted
  std::vector<NodePath> masked_paths;  // A^masked, after any NOP swap
  std::vector<std::string> masked_labels;
  std::vector<std::string> decoder_input;
  std::vector<std::string> target;
  int nop_label = 0;
};

/// Encoder masking is decided on the uncorrupted paths; the NOP swap is then
/// applied to the masked paths.
TrainingExample make_example(const CorpusRecord& record, const CorruptionConfig& config, Rng& rng);

/// Examples for every record, `copies` times over, example i drawing from
/// Rng(derive(seed, i)).
std::vector<TrainingExample> corrupt_corpus(const std::vector<CorpusRecord>& records,
                                            const CorruptionConfig& config, std::uint64_t seed, int copies = 1);

nlohmann::json example_to_json(const TrainingExample& example);
TrainingExample example_from_json(const nlohmann::json& j);

/// Human-readable trace of one example: paths before/after masking, m^A,
/// decoder input and target, NOP label.
std::string inspect_example(const TrainingExample& example);

}  // namespace treebert
