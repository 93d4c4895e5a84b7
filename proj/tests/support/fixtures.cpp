#include "fixtures.hpp"

#include "generators.hpp"

namespace treebert::testing {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.num_layers_enc = 1;
  cfg.num_layers_dec = 1;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.d_node = 4;
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<TrainingExample> random_examples(Rng& rng, int count, const CorruptionConfig& corruption) {
  std::vector<TrainingExample> out;
  for (int i = 0; i < count; ++i)
    out.push_back(make_example(random_record(rng, "ex" + std::to_string(i)), corruption, rng));
  return out;
}

Vocabularies vocab_for(const std::vector<TrainingExample>& examples, int merges) {
  std::vector<std::string> text;
  for (const auto& ex : examples)
    for (const auto& t : ex.target)
      if (!is_special_token(t)) text.push_back(t);
  return Vocabularies::build(learn_bpe(text, merges), examples);
}

ad::Var weighted_sum(ad::Graph& g, ad::Var v, std::uint64_t seed) {
  const ad::Matrix& value = g.value(v);
  Rng rng(seed);
  ad::Matrix left(1, value.rows()), right(value.cols(), 1);
  for (Eigen::Index i = 0; i < left.size(); ++i) left.data()[i] = rng.uniform() + 0.5;
  for (Eigen::Index i = 0; i < right.size(); ++i) right.data()[i] = rng.uniform() - 0.5;
  return g.matmul(g.matmul(g.constant(left), v), g.constant(right));
}

}  // namespace treebert::testing
