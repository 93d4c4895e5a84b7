#pragma once

#include "treebert/model.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace treebert {

struct TrainConfig {
  double base_lr = 1e-3;
  long total_steps = 200;
  double warmup_fraction = 0.1;
  int batch_size = 8;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout = 0.1;
  double clip_norm = 1.0;  // 0 disables clipping
  std::uint64_t seed = 0;
  long eval_interval = 0;  // validation check every N steps; 0 disables early stopping
  int patience = 5;        // non-improving validation checks before stopping

  void validate() const;
  nlohmann::json to_json() const;
};

/// Linear warmup from 0 to base_lr over the first ceil(warmup_fraction * total)
/// steps, then linear decay to 0 at total_steps.
double lr_at(long step, const TrainConfig& config);

struct LossRow {
  long step = 0;
  double loss = 0.0;
  double loss_tmlm = 0.0;
  double loss_nop = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<LossRow> curve;
  std::optional<long> diverged_at;  // parameters are left at the last finite step
  std::optional<double> best_validation;
  long steps_run = 0;
};

/// AdamW (decoupled weight decay) over mini-batches drawn from a per-epoch
/// shuffle. Deterministic for a given seed.
TrainResult train(TreeBertModel& model, const std::vector<TrainingExample>& examples, const TrainConfig& config,
                  const std::vector<TrainingExample>* validation = nullptr,
                  const std::function<void(const LossRow&)>& on_step = {});

struct LossSummary {
  double loss = 0.0;
  double loss_tmlm = 0.0;
  double loss_nop = 0.0;
  double nop_accuracy = 0.0;
};

/// Mean losses in evaluation mode (no dropout).
LossSummary evaluate_loss(const TreeBertModel& model, const std::vector<TrainingExample>& examples);

std::string loss_curve_csv(const std::vector<LossRow>& curve);

}  // namespace treebert
