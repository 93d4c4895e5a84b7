#include "treebert/decode.hpp"

#include <algorithm>

namespace treebert {

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = i;
  return best;
}

std::vector<std::string> greedy_decode(const TreeBertModel& model, const std::vector<NodePath>& paths,
                                       Language language, int max_len, const std::set<std::string>* visible) {
  std::vector<std::string> out;
  if (max_len <= 0) return out;
  const int limit = std::min(max_len, model.config().max_code_len - 1);

  const PathSetFeatures features = model.featurize(paths);
  ad::Matrix memory;
  {
    ad::Graph g;
    memory = g.value(model.encode(g, features, false, nullptr));
  }

  std::vector<std::vector<int>> bags{model.decoder_bag(std::string(language_token(language)))};
  const auto& tokens = model.vocab().tokens;
  while (static_cast<int>(out.size()) < limit) {
    ad::Graph g;
    auto dec = model.decode(g, g.constant(memory), features.path_valid, bags, false, nullptr);
    const auto& logits = g.value(dec.logits);
    const int next = argmax_lowest(logits.row(logits.rows() - 1));
    if (next == TokenVocab::kEos) break;
    const std::string& token = tokens.token(next);
    out.push_back(token);
    const bool feed = !visible || visible->count(token) > 0;
    bags.push_back(model.decoder_bag(feed ? token : std::string(kMaskToken)));
  }
  return out;
}

}  // namespace treebert
