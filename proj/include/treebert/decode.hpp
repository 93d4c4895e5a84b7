#pragma once

#include "treebert/model.hpp"

#include <set>
#include <string>
#include <vector>

namespace treebert {

/// Greedy decoding from a path set: starts at the language token, appends the
/// argmax token each step (ties go to the lowest id) and stops at [EOS] or
/// after max_len tokens.
///
/// By default every generated token is fed back as is. When `visible` is
/// given, a generated token is fed back only if it is in that set and as
/// [mask] otherwise, mirroring the decoder-side masking used in pre-training.
std::vector<std::string> greedy_decode(const TreeBertModel& model, const std::vector<NodePath>& paths,
                                       Language language, int max_len,
                                       const std::set<std::string>* visible = nullptr);

/// Index of the largest entry of `row`; the lowest index wins ties.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace treebert
