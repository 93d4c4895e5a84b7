#include "treebert/train.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace treebert {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(warmup_fraction > 0.0 && warmup_fraction < 1.0, "warmup_fraction must be in (0, 1)");
  require(base_lr >= 0.0, "base_lr must be non-negative");
  require(total_steps > 0 && batch_size > 0, "total_steps and batch_size must be positive");
  require(weight_decay >= 0.0 && beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "optimizer constants");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(patience > 0 && eval_interval >= 0, "patience must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"base_lr", base_lr},       {"total_steps", total_steps}, {"warmup_fraction", warmup_fraction},
          {"batch_size", batch_size}, {"weight_decay", weight_decay}, {"beta1", beta1},
          {"beta2", beta2},           {"epsilon", epsilon},         {"dropout", dropout},
          {"clip_norm", clip_norm},   {"seed", seed},               {"eval_interval", eval_interval},
          {"patience", patience}};
}

double lr_at(long step, const TrainConfig& config) {
  const long total = config.total_steps;
  if (step <= 0) return 0.0;
  if (step >= total) return 0.0;
  const long warmup = std::max(1L, static_cast<long>(std::ceil(config.warmup_fraction * total - 1e-9)));
  if (step <= warmup) return config.base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return config.base_lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

std::string loss_curve_csv(const std::vector<LossRow>& curve) {
  std::string out = "step,loss,loss_tmlm,loss_nop,lr\n";
  char buf[160];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g\n", r.step, r.loss, r.loss_tmlm, r.loss_nop, r.lr);
    out += buf;
  }
  return out;
}

}  // namespace treebert
