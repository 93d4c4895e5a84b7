#pragma once

#include "treebert/corruption.hpp"
#include "treebert/model.hpp"

#include <vector>

namespace treebert::testing {

/// One layer each way, hidden 8, two heads, d_node 4, no dropout.
ModelConfig tiny_config();

/// Corrupted examples from random toy programs.
std::vector<TrainingExample> random_examples(Rng& rng, int count, const CorruptionConfig& corruption = {});

/// Character-level subtokens and vocabularies built from `examples`.
Vocabularies vocab_for(const std::vector<TrainingExample>& examples, int merges = 0);

/// Sum of all entries of `v` weighted by a fixed random rank-one pattern.
ad::Var weighted_sum(ad::Graph& g, ad::Var v, std::uint64_t seed);

}  // namespace treebert::testing
