#include "treebert/losses.hpp"

#include "treebert/errors.hpp"

#include <cmath>

namespace treebert {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tmlm_loss(const ad::Matrix& logits, std::span<const int> targets, int ignore) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) throw ShapeMismatch("tmlm_loss: one target per row");
  double total = 0.0;
  int count = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t == ignore) continue;
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    total += lse - logits(r, t);
    ++count;
  }
  return count ? total / count : 0.0;
}

double nop_loss(double probability, int label) {
  return -(label * std::log(probability) + (1 - label) * std::log(1.0 - probability));
}

double hybrid_loss(double loss_tmlm, double loss_nop, double alpha) {
  return alpha * loss_tmlm + (1.0 - alpha) * loss_nop;
}

}  // namespace treebert
