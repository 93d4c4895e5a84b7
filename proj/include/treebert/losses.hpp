#pragma once

#include "treebert/autodiff.hpp"

#include <span>

namespace treebert {

double sigmoid(double x);

/// Mean over non-ignored rows of -log softmax(logits)[target].
double tmlm_loss(const ad::Matrix& logits, std::span<const int> targets, int ignore = -1);

/// -(y log p + (1 - y) log(1 - p)) for p in (0, 1).
double nop_loss(double probability, int label);

/// alpha * tmlm + (1 - alpha) * nop.
double hybrid_loss(double loss_tmlm, double loss_nop, double alpha);

}  // namespace treebert
