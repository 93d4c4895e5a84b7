#include "treebert/corruption.hpp"

#include "treebert/bpe.hpp"
#include "treebert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treebert {

MaskStrategy parse_mask_strategy(std::string_view name) {
  if (name == "level") return MaskStrategy::level;
  if (name == "topk") return MaskStrategy::topk;
  if (name == "random") return MaskStrategy::random;
  if (name == "value-only" || name == "value_only") return MaskStrategy::value_only;
  throw Error("unknown masking strategy '" + std::string(name) + "' (expected level|topk|random|value-only)");
}

std::string_view mask_strategy_name(MaskStrategy strategy) {
  switch (strategy) {
    case MaskStrategy::level: return "level";
    case MaskStrategy::topk: return "topk";
    case MaskStrategy::random: return "random";
    case MaskStrategy::value_only: return "value-only";
  }
  return "level";
}

std::vector<double> mask_distribution(int path_length) {
  if (path_length < 1) throw std::invalid_argument("mask_distribution: path_length must be >= 1");
  std::vector<double> q(static_cast<std::size_t>(path_length));
  double sum = 0.0;
  for (int j = 1; j <= path_length; ++j) sum += std::exp(static_cast<double>(j - path_length));
  for (int l = 1; l <= path_length; ++l)
    q[static_cast<std::size_t>(l - 1)] = std::exp(static_cast<double>(l - path_length)) / sum;
  return q;
}

int masked_count(int path_length, double mask_ratio) {
  if (!(mask_ratio > 0.0 && mask_ratio <= 1.0)) throw std::invalid_argument("mask ratio must be in (0, 1]");
  const int k = static_cast<int>(std::lround(mask_ratio * path_length));
  return std::clamp(k, 1, path_length);
}

namespace {

/// Indices of the k largest keys (ties to the lower index), ascending.
std::vector<int> top_k(const std::vector<std::pair<double, int>>& keyed, int k) {
  std::vector<std::pair<double, int>> order = keyed;
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out;
  for (int i = 0; i < k && i < static_cast<int>(order.size()); ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> select_masked_nodes(const NodePath& path, double mask_ratio, Rng& rng, MaskStrategy strategy) {
  const int length = path.length();
  const int k = masked_count(length, mask_ratio);
  std::vector<std::pair<double, int>> keyed;
  switch (strategy) {
    case MaskStrategy::level: {
      // Gumbel-top-k: sampling k nodes without replacement with probability q.
      const auto q = mask_distribution(length);
      for (int l = 0; l < length; ++l) keyed.emplace_back(std::log(q[static_cast<std::size_t>(l)]) + rng.gumbel(), l);
      break;
    }
    case MaskStrategy::topk: {
      const auto q = mask_distribution(length);
      for (int l = 0; l < length; ++l) keyed.emplace_back(q[static_cast<std::size_t>(l)], l);
      break;
    }
    case MaskStrategy::random:
      for (int l = 0; l < length; ++l) keyed.emplace_back(rng.gumbel(), l);
      break;
    case MaskStrategy::value_only:
      for (int l = 0; l < length; ++l)
        if (path.nodes[static_cast<std::size_t>(l)].is_value) keyed.emplace_back(rng.gumbel(), l);
      break;
  }
  return top_k(keyed, k);
}

EncoderMask apply_encoder_mask(const PathSet& paths, double mask_ratio, Rng& rng, MaskStrategy strategy) {
  EncoderMask out;
  out.masked_paths = paths.paths;
  for (auto& path : out.masked_paths) {
    auto indices = select_masked_nodes(path, mask_ratio, rng, strategy);
    for (int i : indices) {
      auto& node = path.nodes[static_cast<std::size_t>(i)];
      out.masked_labels.insert(node.label);
      node.label = std::string(kMaskToken);
    }
    out.masked_indices.push_back(std::move(indices));
  }
  return out;
}

DecoderSide build_decoder_side(const std::vector<std::string>& code, const std::set<std::string>& masked_labels,
                               Language language, int max_code_length) {
  if (static_cast<long>(code.size()) > static_cast<long>(max_code_length) - 2)
    throw CodeTooLong(code.size(), static_cast<std::size_t>(std::max(max_code_length - 2, 0)));
  DecoderSide out;
  out.input.reserve(code.size() + 2);
  out.input.emplace_back(language_token(language));
  for (const auto& token : code)
    out.input.push_back(masked_labels.count(token) ? token : std::string(kMaskToken));
  out.input.emplace_back(kClsToken);
  out.target = code;
  out.target.emplace_back(kEosToken);
  return out;
}

NopResult apply_nop(std::vector<NodePath> paths, double swap_prob, Rng& rng) {
  NopResult out;
  out.paths = std::move(paths);
  if (!rng.bernoulli(swap_prob)) return out;

  // Swappable pairs: two non-terminal positions whose labels differ.
  std::vector<std::pair<std::size_t, std::vector<std::pair<int, int>>>> candidates;
  for (std::size_t p = 0; p < out.paths.size(); ++p) {
    const auto& nodes = out.paths[p].nodes;
    std::vector<std::pair<int, int>> pairs;
    const int inner = static_cast<int>(nodes.size()) - 1;
    for (int a = 0; a < inner; ++a)
      for (int b = a + 1; b < inner; ++b)
        if (nodes[static_cast<std::size_t>(a)].label != nodes[static_cast<std::size_t>(b)].label) pairs.emplace_back(a, b);
    if (!pairs.empty()) candidates.emplace_back(p, std::move(pairs));
  }
  if (candidates.empty()) {
    out.no_swappable_path = true;
    return out;
  }
  const auto& [p, pairs] = candidates[rng.below(candidates.size())];
  const auto [a, b] = pairs[rng.below(pairs.size())];
  auto& nodes = out.paths[p].nodes;
  std::swap(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
  out.label = 1;
  out.path_index = static_cast<int>(p);
  out.first = a;
  out.second = b;
  return out;
}

}  // namespace treebert
