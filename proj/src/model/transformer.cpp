#include "treebert/model.hpp"

#include "treebert/errors.hpp"
#include "treebert/losses.hpp"

#include <algorithm>

#include <cmath>
#include <set>
#include <stdexcept>

namespace treebert {

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("model config: ") + what);
  };
  require(num_layers_enc >= 0 && num_layers_dec >= 0, "layer counts must be non-negative");
  require(hidden > 0 && heads > 0 && hidden % heads == 0, "hidden must be a positive multiple of heads");
  require(d_node > 0 && max_paths > 0 && max_nodes > 0 && max_height > 0, "sizes must be positive");
  require(max_code_len >= 3, "max_code_len must be at least 3");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"num_layers_enc", num_layers_enc},
          {"num_layers_dec", num_layers_dec},
          {"hidden", hidden},
          {"heads", heads},
          {"ffn", ffn_width()},
          {"d_node", d_node},
          {"max_paths", max_paths},
          {"max_nodes", max_nodes},
          {"max_code_len", max_code_len},
          {"max_height", max_height},
          {"dropout", dropout},
          {"alpha", alpha},
          {"position_mode", position_mode == PositionMode::tree ? "tree" : "learned"},
          {"tie_output", tie_output}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.num_layers_enc = j.at("num_layers_enc").get<int>();
  c.num_layers_dec = j.at("num_layers_dec").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.d_node = j.at("d_node").get<int>();
  c.max_paths = j.at("max_paths").get<int>();
  c.max_nodes = j.at("max_nodes").get<int>();
  c.max_code_len = j.at("max_code_len").get<int>();
  c.max_height = j.at("max_height").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.position_mode = j.at("position_mode").get<std::string>() == "learned" ? PositionMode::learned : PositionMode::tree;
  c.tie_output = j.at("tie_output").get<bool>();
  c.validate();
  return c;
}

TokenVocab::TokenVocab(const std::vector<std::string>& tokens) {
  tokens_ = {std::string(kPadToken), std::string(kUnkToken), std::string(kEosToken)};
  std::set<std::string> sorted(tokens.begin(), tokens.end());
  for (const auto& t : sorted)
    if (t != kPadToken && t != kUnkToken && t != kEosToken) tokens_.push_back(t);
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
}

int TokenVocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

Vocabularies Vocabularies::build(SubtokenVocab subtokens, const std::vector<TrainingExample>& examples) {
  std::vector<std::vector<NodePath>> sets;
  std::vector<std::string> tokens;
  for (const auto& ex : examples) {
    sets.push_back(ex.paths);
    tokens.insert(tokens.end(), ex.target.begin(), ex.target.end());
  }
  return Vocabularies{std::move(subtokens), TypeVocab::from_paths(sets), TokenVocab(tokens)};
}

namespace {

ad::Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

}  // namespace

TreeBertModel::Linear TreeBertModel::make_linear(const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.w = &params_.add(name + ".w", uniform(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  l.b = &params_.add(name + ".b", ad::Matrix::Zero(1, out), false);
  return l;
}

TreeBertModel::Norm TreeBertModel::make_norm(const std::string& name, int width) {
  Norm n;
  n.gain = &params_.add(name + ".g", ad::Matrix::Ones(1, width), false);
  n.bias = &params_.add(name + ".b", ad::Matrix::Zero(1, width), false);
  return n;
}

TreeBertModel::Attention TreeBertModel::make_attention(const std::string& name, Rng& rng) {
  const int h = config_.hidden;
  return {make_linear(name + ".q", h, h, rng), make_linear(name + ".k", h, h, rng),
          make_linear(name + ".v", h, h, rng), make_linear(name + ".o", h, h, rng)};
}

TreeBertModel::FeedForward TreeBertModel::make_ff(const std::string& name, Rng& rng) {
  return {make_linear(name + ".up", config_.hidden, config_.ffn_width(), rng),
          make_linear(name + ".down", config_.ffn_width(), config_.hidden, rng)};
}

TreeBertModel::TreeBertModel(ModelConfig config, Vocabularies vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(seed);
  const int d = config_.d_node;
  const double emb = 1.0 / std::sqrt(static_cast<double>(d));
  tables_.subtokens = &params_.add("enc.subtoken_emb", uniform(vocab_.subtokens.size(), d, emb, rng));
  tables_.types = &params_.add("enc.type_emb", uniform(vocab_.types.size(), d, emb, rng));
  tables_.levels = &params_.add("enc.level_emb", uniform(config_.max_height + 1, d, emb, rng));
  if (config_.position_mode == PositionMode::learned)
    tables_.learned_positions = &params_.add("enc.learned_pos", uniform(config_.max_nodes, d, emb, rng));
  enc_proj_ = make_linear("enc.proj", config_.max_nodes * d, config_.hidden, rng);
  for (int l = 0; l < config_.num_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    enc_layers_.push_back({make_norm(p + ".ln1", config_.hidden), make_norm(p + ".ln2", config_.hidden),
                           make_attention(p + ".self", rng), make_ff(p + ".ff", rng)});
  }
  enc_norm_ = make_norm("enc.norm", config_.hidden);

  const double hemb = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
  dec_subtokens_ = &params_.add("dec.subtoken_emb", uniform(vocab_.subtokens.size(), config_.hidden, hemb, rng));
  dec_positions_ = &params_.add("dec.pos_emb", uniform(config_.max_code_len, config_.hidden, hemb, rng));
  for (int l = 0; l < config_.num_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    dec_layers_.push_back({make_norm(p + ".ln1", config_.hidden), make_norm(p + ".ln2", config_.hidden),
                           make_norm(p + ".ln3", config_.hidden), make_attention(p + ".self", rng),
                           make_attention(p + ".cross", rng), make_ff(p + ".ff", rng)});
  }
  dec_norm_ = make_norm("dec.norm", config_.hidden);

  if (config_.tie_output) {
    out_.b = &params_.add("out.b", ad::Matrix::Zero(1, vocab_.tokens.size()), false);
    for (const auto& token : vocab_.tokens.tokens()) output_bags_.push_back(decoder_bag(token));
  } else {
    out_ = make_linear("out", config_.hidden, vocab_.tokens.size(), rng);
  }
  nop_ = make_linear("nop", config_.hidden, 1, rng);
}

std::vector<int> TreeBertModel::decoder_bag(const std::string& token) const {
  return split_token(vocab_.subtokens, token);
}

PathSetFeatures TreeBertModel::featurize(const std::vector<NodePath>& paths) const {
  SplitCache cache(vocab_.subtokens);
  if (static_cast<int>(paths.size()) > config_.max_paths) {
    std::vector<NodePath> kept(paths.begin(), paths.begin() + config_.max_paths);
    return featurize_paths(kept, cache, vocab_.types, config_.max_nodes, config_.max_height);
  }
  return featurize_paths(paths, cache, vocab_.types, config_.max_nodes, config_.max_height);
}

ModelInput TreeBertModel::prepare(const TrainingExample& example) const {
  if (example.decoder_input.size() != example.target.size() + 1)
    throw ShapeMismatch("decoder input must be one token longer than the target");
  if (static_cast<int>(example.decoder_input.size()) > config_.max_code_len)
    throw CodeTooLong(example.decoder_input.size(), static_cast<std::size_t>(config_.max_code_len));
  if (example.masked_paths.empty()) throw ShapeMismatch("example has no paths");
  ModelInput in;
  in.paths = featurize(example.masked_paths);
  for (const auto& t : example.decoder_input) in.decoder_bags.push_back(decoder_bag(t));
  for (const auto& t : example.target) in.target_ids.push_back(vocab_.tokens.id(t));
  in.nop_label = example.nop_label;
  return in;
}

ad::Var TreeBertModel::linear(ad::Graph& g, const Linear& l, ad::Var x) const {
  return g.add_row(g.matmul(x, g.param(*l.w)), g.param(*l.b));
}

ad::Var TreeBertModel::norm(ad::Graph& g, const Norm& n, ad::Var x) const {
  return g.layer_norm(x, g.param(*n.gain), g.param(*n.bias));
}

ad::Var TreeBertModel::drop(ad::Graph& g, ad::Var x, bool train, Rng* rng) const {
  if (!train || config_.dropout <= 0.0) return x;
  if (!rng) throw std::invalid_argument("training forward pass needs an rng");
  return g.dropout(x, config_.dropout, *rng);
}

ad::Var TreeBertModel::attend(ad::Graph& g, const Attention& a, ad::Var queries, ad::Var keys,
                              const ad::Graph::AttentionMask& mask) const {
  ad::Var q = linear(g, a.q, queries);
  ad::Var k = linear(g, a.k, keys);
  ad::Var v = linear(g, a.v, keys);
  return linear(g, a.o, g.attention(q, k, v, config_.heads, mask));
}

ad::Var TreeBertModel::feed_forward(ad::Graph& g, const FeedForward& f, ad::Var x, bool train, Rng* rng) const {
  return linear(g, f.down, drop(g, g.gelu(linear(g, f.up, x)), train, rng));
}

ad::Var TreeBertModel::encode(ad::Graph& g, const PathSetFeatures& paths, bool train, Rng* rng) const {
  if (paths.num_paths < 1) throw ShapeMismatch("encode: empty path set");
  if (std::count(paths.path_valid.begin(), paths.path_valid.end(), true) > config_.max_paths)
    throw ShapeMismatch("encode: more paths than max_paths");
  if (paths.max_nodes != config_.max_nodes) throw ShapeMismatch("encode: max_nodes differs from model config");
  ad::Var x = embed_paths(g, tables_, paths, config_.position_mode);
  x = drop(g, linear(g, enc_proj_, x), train, rng);
  ad::Graph::AttentionMask mask{paths.path_valid, false};
  for (const auto& layer : enc_layers_) {
    ad::Var h = norm(g, layer.ln1, x);
    x = g.add(x, drop(g, attend(g, layer.self, h, h, mask), train, rng));
    x = g.add(x, drop(g, feed_forward(g, layer.ff, norm(g, layer.ln2, x), train, rng), train, rng));
  }
  return norm(g, enc_norm_, x);
}

TreeBertModel::DecoderOutput TreeBertModel::decode(ad::Graph& g, ad::Var memory, const std::vector<bool>& path_valid,
                                                   const std::vector<std::vector<int>>& input_bags, bool train,
                                                   Rng* rng) const {
  const auto length = static_cast<Eigen::Index>(input_bags.size());
  if (length < 1 || length > config_.max_code_len) throw ShapeMismatch("decode: input length out of range");
  if (g.value(memory).cols() != config_.hidden) throw ShapeMismatch("decode: memory width");
  ad::Var x = g.add(g.embedding_bag(g.param(*dec_subtokens_), input_bags),
                    g.slice_rows(g.param(*dec_positions_), 0, length));
  x = drop(g, x, train, rng);
  ad::Graph::AttentionMask causal{{}, true};
  ad::Graph::AttentionMask cross{path_valid, false};
  for (const auto& layer : dec_layers_) {
    ad::Var h = norm(g, layer.ln1, x);
    x = g.add(x, drop(g, attend(g, layer.self, h, h, causal), train, rng));
    x = g.add(x, drop(g, attend(g, layer.cross, norm(g, layer.ln2, x), memory, cross), train, rng));
    x = g.add(x, drop(g, feed_forward(g, layer.ff, norm(g, layer.ln3, x), train, rng), train, rng));
  }
  ad::Var hidden = norm(g, dec_norm_, x);
  ad::Var logits;
  if (config_.tie_output) {
    ad::Var table = g.embedding_bag(g.param(*dec_subtokens_), output_bags_);
    logits = g.add_row(g.matmul_nt(hidden, table), g.param(*out_.b));
  } else {
    logits = linear(g, out_, hidden);
  }
  return {logits, hidden};
}

ad::Var TreeBertModel::nop_head(ad::Graph& g, ad::Var cls_hidden) const { return linear(g, nop_, cls_hidden); }

ForwardOutput TreeBertModel::forward(ad::Graph& g, const ModelInput& input, bool train, Rng* rng) const {
  const auto length = static_cast<Eigen::Index>(input.decoder_bags.size());
  if (static_cast<Eigen::Index>(input.target_ids.size()) != length - 1)
    throw ShapeMismatch("forward: target must be one shorter than decoder input");
  ForwardOutput out;
  out.memory = encode(g, input.paths, train, rng);
  DecoderOutput dec = decode(g, out.memory, input.paths.path_valid, input.decoder_bags, train, rng);
  out.tmlm_logits = g.slice_rows(dec.logits, 0, length - 1);
  out.nop_logit = nop_head(g, g.slice_rows(dec.hidden, length - 1, 1));
  out.nop_probability = sigmoid(g.scalar(out.nop_logit));
  out.loss_tmlm = g.cross_entropy(out.tmlm_logits, input.target_ids, TokenVocab::kPad);
  out.loss_nop = g.bce_with_logit(out.nop_logit, static_cast<double>(input.nop_label));
  out.loss = g.combine(out.loss_tmlm, config_.alpha, out.loss_nop, 1.0 - config_.alpha);
  return out;
}

}  // namespace treebert
