#pragma once

#include "treebert/autodiff.hpp"
#include "treebert/bpe.hpp"
#include "treebert/corruption.hpp"
#include "treebert/embedding.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace treebert {

struct ModelConfig {
  int num_layers_enc = 2;
  int num_layers_dec = 2;
  int hidden = 128;
  int heads = 4;
  int ffn = 0;  // 0: 4 * hidden
  int d_node = 64;
  int max_paths = 100;
  int max_nodes = 20;
  int max_code_len = 200;
  int max_height = 32;  // H_max; the level table has max_height + 1 rows
  double dropout = 0.1;
  double alpha = 0.75;
  PositionMode position_mode = PositionMode::tree;
  bool tie_output = false;  // output head reuses the decoder's token vectors

  int ffn_width() const noexcept { return ffn > 0 ? ffn : 4 * hidden; }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Whole-token output vocabulary of the decoder: [PAD], [UNK], [EOS], then
/// the training targets' tokens in sorted order.
class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;

  TokenVocab() : TokenVocab(std::vector<std::string>{}) {}
  explicit TokenVocab(const std::vector<std::string>& tokens);

  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct Vocabularies {
  SubtokenVocab subtokens;
  TypeVocab types;
  TokenVocab tokens;

  /// Type names from the examples' paths and output tokens from their targets.
  static Vocabularies build(SubtokenVocab subtokens, const std::vector<TrainingExample>& examples);
};

/// Everything the network consumes for one example.
struct ModelInput {
  PathSetFeatures paths;
  std::vector<std::vector<int>> decoder_bags;  // subtoken ids per decoder input position
  std::vector<int> target_ids;                 // output-vocab ids, one per TMLM position
  int nop_label = 0;
};

struct ForwardOutput {
  ad::Var memory;
  ad::Var tmlm_logits;  // (M + 1) x output vocab
  ad::Var nop_logit;    // 1 x 1
  ad::Var loss_tmlm;
  ad::Var loss_nop;
  ad::Var loss;
  double nop_probability = 0.5;
};

/// Transformer encoder-decoder over path sets.
///
/// Encoder: concatenated path vectors -> one linear projection -> pre-norm
/// self-attention blocks with no sequence position encoding (paths are an
/// unordered set). Decoder: token vectors (subtoken sums) plus learned
/// sequence positions -> causal self-attention, cross-attention into the
/// path memory, feed-forward. TMLM logits come from every position but the
/// last; the last ([CLS]) feeds the NOP head.
class TreeBertModel {
 public:
  TreeBertModel(ModelConfig config, Vocabularies vocab, std::uint64_t seed);
  TreeBertModel(const TreeBertModel&) = delete;
  TreeBertModel& operator=(const TreeBertModel&) = delete;
  TreeBertModel(TreeBertModel&&) = default;

  const ModelConfig& config() const noexcept { return config_; }
  ModelConfig& mutable_config() noexcept { return config_; }
  const Vocabularies& vocab() const noexcept { return vocab_; }
  ad::ParameterStore& params() noexcept { return params_; }
  const ad::ParameterStore& params() const noexcept { return params_; }
  EmbeddingTables tables() const noexcept { return tables_; }

  /// Path features for a path set; paths beyond max_paths are dropped.
  PathSetFeatures featurize(const std::vector<NodePath>& paths) const;
  std::vector<int> decoder_bag(const std::string& token) const;
  ModelInput prepare(const TrainingExample& example) const;

  /// `rng` is required when train is true (dropout).
  ad::Var encode(ad::Graph& g, const PathSetFeatures& paths, bool train, Rng* rng) const;
  struct DecoderOutput {
    ad::Var logits;  // one row per decoder input position
    ad::Var hidden;  // final normalized states
  };
  DecoderOutput decode(ad::Graph& g, ad::Var memory, const std::vector<bool>& path_valid,
                       const std::vector<std::vector<int>>& input_bags, bool train, Rng* rng) const;
  ad::Var nop_head(ad::Graph& g, ad::Var cls_hidden) const;

  ForwardOutput forward(ad::Graph& g, const ModelInput& input, bool train, Rng* rng) const;

 private:
  struct Linear {
    ad::Parameter* w = nullptr;
    ad::Parameter* b = nullptr;
  };
  struct Norm {
    ad::Parameter* gain = nullptr;
    ad::Parameter* bias = nullptr;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct FeedForward {
    Linear up, down;
  };
  struct EncoderLayer {
    Norm ln1, ln2;
    Attention self;
    FeedForward ff;
  };
  struct DecoderLayer {
    Norm ln1, ln2, ln3;
    Attention self, cross;
    FeedForward ff;
  };

  Linear make_linear(const std::string& name, int in, int out, Rng& rng);
  Norm make_norm(const std::string& name, int width);
  Attention make_attention(const std::string& name, Rng& rng);
  FeedForward make_ff(const std::string& name, Rng& rng);

  ad::Var linear(ad::Graph& g, const Linear& l, ad::Var x) const;
  ad::Var norm(ad::Graph& g, const Norm& n, ad::Var x) const;
  ad::Var attend(ad::Graph& g, const Attention& a, ad::Var queries, ad::Var keys,
                 const ad::Graph::AttentionMask& mask) const;
  ad::Var feed_forward(ad::Graph& g, const FeedForward& f, ad::Var x, bool train, Rng* rng) const;
  ad::Var drop(ad::Graph& g, ad::Var x, bool train, Rng* rng) const;

  ModelConfig config_;
  Vocabularies vocab_;
  ad::ParameterStore params_;
  EmbeddingTables tables_;
  Linear enc_proj_;
  std::vector<EncoderLayer> enc_layers_;
  Norm enc_norm_;
  ad::Parameter* dec_subtokens_ = nullptr;
  ad::Parameter* dec_positions_ = nullptr;
  std::vector<DecoderLayer> dec_layers_;
  Norm dec_norm_;
  Linear out_;
  Linear nop_;
  std::vector<std::vector<int>> output_bags_;  // tied head: subtoken ids of each output token
};

}  // namespace treebert
