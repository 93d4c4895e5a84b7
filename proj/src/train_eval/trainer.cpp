#include "treebert/train.hpp"

#include "treebert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treebert {
namespace {

struct AdamState {
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  long t = 0;
};

bool grads_finite(const ad::ParameterStore& store) {
  for (const auto& p : store.all())
    if (!p.grad.allFinite()) return false;
  return true;
}

std::vector<ad::Matrix> snapshot(const ad::ParameterStore& store) {
  std::vector<ad::Matrix> out;
  for (const auto& p : store.all()) out.push_back(p.value);
  return out;
}

void restore(ad::ParameterStore& store, const std::vector<ad::Matrix>& values) {
  std::size_t i = 0;
  for (auto& p : store.all()) p.value = values[i++];
}

}  // namespace

LossSummary evaluate_loss(const TreeBertModel& model, const std::vector<TrainingExample>& examples) {
  LossSummary s;
  if (examples.empty()) return s;
  int correct = 0;
  for (const auto& ex : examples) {
    ad::Graph g;
    ModelInput in = model.prepare(ex);
    ForwardOutput out = model.forward(g, in, false, nullptr);
    s.loss += g.scalar(out.loss);
    s.loss_tmlm += g.scalar(out.loss_tmlm);
    s.loss_nop += g.scalar(out.loss_nop);
    if ((out.nop_probability >= 0.5 ? 1 : 0) == ex.nop_label) ++correct;
  }
  const auto n = static_cast<double>(examples.size());
  s.loss /= n;
  s.loss_tmlm /= n;
  s.loss_nop /= n;
  s.nop_accuracy = correct / n;
  return s;
}

TrainResult train(TreeBertModel& model, const std::vector<TrainingExample>& examples, const TrainConfig& config,
                  const std::vector<TrainingExample>* validation,
                  const std::function<void(const LossRow&)>& on_step) {
  config.validate();
  if (examples.empty()) throw EmptyCorpus();
  model.mutable_config().dropout = config.dropout;

  std::vector<ModelInput> inputs;
  inputs.reserve(examples.size());
  for (const auto& ex : examples) inputs.push_back(model.prepare(ex));

  auto& store = model.params();
  AdamState adam;
  for (const auto& p : store.all()) {
    adam.m.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    adam.v.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
  }

  Rng dropout_rng(Rng::derive(config.seed, 0x64726f70ULL));
  std::vector<std::size_t> order(inputs.size());
  std::size_t cursor = order.size();
  long epoch = 0;

  TrainResult result;
  std::vector<ad::Matrix> best_params;
  int stale_checks = 0;

  for (long step = 1; step <= config.total_steps; ++step) {
    store.zero_grad();
    LossRow row;
    row.step = step;
    row.lr = lr_at(step, config);
    const int batch = config.batch_size;
    for (int b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(Rng::derive(config.seed, 0x5348554646ULL + static_cast<std::uint64_t>(epoch++)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
        cursor = 0;
      }
      const ModelInput& in = inputs[order[cursor++]];
      ad::Graph g;
      ForwardOutput out = model.forward(g, in, true, &dropout_rng);
      row.loss += g.scalar(out.loss) / batch;
      row.loss_tmlm += g.scalar(out.loss_tmlm) / batch;
      row.loss_nop += g.scalar(out.loss_nop) / batch;
      g.backward(g.scale(out.loss, 1.0 / batch));
    }

    if (!std::isfinite(row.loss) || !grads_finite(store)) {
      result.diverged_at = step;
      break;
    }

    if (config.clip_norm > 0.0) {
      double sq = 0.0;
      for (const auto& p : store.all()) sq += p.grad.squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm > config.clip_norm)
        for (auto& p : store.all()) p.grad *= config.clip_norm / norm;
    }

    ++adam.t;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.t));
    std::size_t i = 0;
    for (auto& p : store.all()) {
      auto& m = adam.m[i];
      auto& v = adam.v[i];
      ++i;
      m = config.beta1 * m + (1.0 - config.beta1) * p.grad;
      v = config.beta2 * v + (1.0 - config.beta2) * p.grad.cwiseAbs2();
      if (row.lr == 0.0) continue;
      ad::Matrix update = (m / bc1).array() / ((v / bc2).array().sqrt() + config.epsilon);
      if (p.decay) update += config.weight_decay * p.value;
      p.value -= row.lr * update;
    }

    result.curve.push_back(row);
    result.steps_run = step;
    if (on_step) on_step(row);

    if (validation && !validation->empty() && config.eval_interval > 0 && step % config.eval_interval == 0) {
      const double val = evaluate_loss(model, *validation).loss;
      if (!result.best_validation || val < *result.best_validation) {
        result.best_validation = val;
        best_params = snapshot(store);
        stale_checks = 0;
      } else if (++stale_checks >= config.patience) {
        break;
      }
    }
  }
  if (!best_params.empty()) restore(store, best_params);
  return result;
}

}  // namespace treebert
