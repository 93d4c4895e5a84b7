#include "support/fixtures.hpp"
#include "support/generators.hpp"

#include "treebert/checkpoint.hpp"
#include "treebert/errors.hpp"
#include "treebert/losses.hpp"
#include "treebert/model.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

using namespace treebert;

namespace {

ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Largest relative error between backward() and central differences over
// every entry of `params`.
double gradcheck(ad::ParameterStore& store, const std::function<ad::Var(ad::Graph&)>& loss, double h = 1e-4) {
  store.zero_grad();
  {
    ad::Graph g;
    g.backward(loss(g));
  }
  double worst = 0.0;
  for (auto& p : store.all()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.data()[i];
      p.value.data()[i] = saved + h;
      ad::Graph up;
      const double fu = up.scalar(loss(up));
      p.value.data()[i] = saved - h;
      ad::Graph down;
      const double fd = down.scalar(loss(down));
      p.value.data()[i] = saved;
      worst = std::max(worst, relative_error(p.grad.data()[i], (fu - fd) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("losses: closed forms") {
  CHECK(std::abs(nop_loss(0.5, 0) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(nop_loss(0.5, 1) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(nop_loss(0.9, 1) - 0.10536) < 1e-5);
  CHECK(std::abs(nop_loss(0.9, 0) - 2.30259) < 1e-5);
  CHECK(hybrid_loss(2.0, 0.6, 1.0) == 2.0);
  CHECK(hybrid_loss(2.0, 0.6, 0.0) == 0.6);
  CHECK(std::abs(hybrid_loss(2.0, 0.6, 0.75) - 1.65) < 1e-12);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(20.0) > 1.0 - 1e-8);
  CHECK(sigmoid(20.0) < 1.0);
  CHECK(sigmoid(-40.0) > 0.0);

  const ad::Matrix uniform = ad::Matrix::Zero(3, 7);
  const std::vector<int> targets{1, 4, 6};
  CHECK(std::abs(tmlm_loss(uniform, targets) - std::log(7.0)) < 1e-12);
  ad::Matrix sharp = ad::Matrix::Zero(3, 7);
  for (int r = 0; r < 3; ++r) sharp(r, targets[static_cast<std::size_t>(r)]) = 50.0;
  CHECK(tmlm_loss(sharp, targets) < 1e-12);

  // Two positions, three classes, by hand.
  ad::Matrix logits(2, 3);
  logits << 1.0, 2.0, 3.0, 0.5, -1.0, 0.0;
  const std::vector<int> gold{2, 0};
  const double l0 = -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  const double l1 = -std::log(std::exp(0.5) / (std::exp(0.5) + std::exp(-1.0) + std::exp(0.0)));
  CHECK(std::abs(tmlm_loss(logits, gold) - (l0 + l1) / 2.0) < 1e-9);
  const std::vector<int> padded{2, 9};
  CHECK(std::abs(tmlm_loss(logits, padded, 9) - l0) < 1e-9);

  ad::Graph g;
  const ad::Var ce = g.cross_entropy(g.constant(logits), gold);
  CHECK(std::abs(g.scalar(ce) - (l0 + l1) / 2.0) < 1e-12);
  const ad::Var bce = g.bce_with_logit(g.constant(ad::Matrix::Constant(1, 1, std::log(9.0))), 1.0);
  CHECK(std::abs(g.scalar(bce) - 0.10536) < 1e-5);
}

TEST_CASE("autodiff: every op against finite differences") {
  Rng rng(3);
  ad::ParameterStore store;
  ad::Parameter& a = store.add("a", random_matrix(4, 6, rng));
  ad::Parameter& b = store.add("b", random_matrix(6, 6, rng));
  ad::Parameter& row = store.add("row", random_matrix(1, 6, rng));
  ad::Parameter& table = store.add("table", random_matrix(5, 6, rng));
  const std::vector<std::vector<int>> bags{{0, 2}, {}, {4, 4, 1}, {3}};
  const std::vector<int> targets{1, 0, 5, 2};

  auto unary = [&](const std::function<ad::Var(ad::Graph&, ad::Var)>& op) {
    return gradcheck(store, [&](ad::Graph& g) { return testing::weighted_sum(g, op(g, g.param(a)), 7); });
  };
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.matmul(x, g.param(b)); }) < 1e-6);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.matmul_nt(x, g.param(b)); }) < 1e-6);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.add(x, g.embedding_bag(g.param(table), bags)); }) < 1e-6);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.add_row(x, g.param(row)); }) < 1e-6);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.combine(g.scale(x, -1.5), 0.3, g.gelu(x), 2.0); }) < 1e-6);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.layer_norm(x, g.param(row), g.param(row)); }) < 1e-5);
  CHECK(unary([&](ad::Graph& g, ad::Var x) { return g.slice_rows(g.reshape(x, 6, 4), 1, 3); }) < 1e-6);
  CHECK(gradcheck(store, [&](ad::Graph& g) { return g.cross_entropy(g.matmul(g.param(a), g.param(b)), targets); }) <
        1e-6);
  CHECK(gradcheck(store, [&](ad::Graph& g) {
          return g.bce_with_logit(testing::weighted_sum(g, g.param(a), 9), 1.0);
        }) < 1e-6);
  const ad::Graph::AttentionMask keys{{true, true, false, true, true, true}, false};
  CHECK(unary([&](ad::Graph& g, ad::Var x) {
          const ad::Var kv = g.matmul(g.param(b), g.param(b));
          return g.attention(x, kv, g.matmul(kv, g.param(b)), 2, keys);
        }) < 1e-5);
  const ad::Graph::AttentionMask causal{{}, true};
  CHECK(gradcheck(store, [&](ad::Graph& g) {
          const ad::Var x = g.add_row(g.matmul(g.param(b), g.param(b)), g.param(row));
          return testing::weighted_sum(g, g.attention(x, g.param(b), g.gelu(x), 3, causal), 11);
        }) < 1e-5);
}

TEST_CASE("autodiff: linearity and unused parameters") {
  Rng rng(5);
  ad::ParameterStore store;
  ad::Parameter& a = store.add("a", random_matrix(3, 3, rng));
  ad::Parameter& unused = store.add("unused", random_matrix(2, 2, rng));
  auto run = [&](double factor) {
    store.zero_grad();
    ad::Graph g;
    g.backward(g.scale(testing::weighted_sum(g, g.gelu(g.param(a)), 1), factor));
    return a.grad;
  };
  const ad::Matrix once = run(1.0);
  const ad::Matrix twice = run(2.0);
  CHECK((twice - 2.0 * once).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(unused.grad.isZero());
}

TEST_CASE("autodiff: attention rows are distributions") {
  Rng rng(7);
  ad::Graph g;
  const ad::Var q = g.constant(random_matrix(5, 8, rng, 3.0));
  const ad::Var k = g.constant(random_matrix(6, 8, rng, 3.0));
  g.attention(q, k, k, 4, {{true, false, true, true, true, false}, false});
  REQUIRE(g.last_attention().size() == 4);
  for (const auto& probs : g.last_attention()) {
    for (Eigen::Index r = 0; r < probs.rows(); ++r) CHECK(std::abs(probs.row(r).sum() - 1.0) < 1e-6);
    CHECK(probs.col(1).isZero());
    CHECK(probs.col(5).isZero());
  }
}

TEST_CASE("model: hybrid loss gradient check on a tiny model") {
  Rng rng(11);
  CorruptionConfig c;
  c.nop_prob = 1.0;
  auto examples = testing::random_examples(rng, 2, c);
  ModelConfig cfg = testing::tiny_config();
  TreeBertModel model(cfg, testing::vocab_for(examples), 2);
  const ModelInput in = model.prepare(examples[0]);
  auto loss = [&](ad::Graph& g) { return model.forward(g, in, false, nullptr).loss; };

  model.params().zero_grad();
  {
    ad::Graph g;
    g.backward(loss(g));
  }
  // Every parameter family receives a gradient, including the level table.
  for (const auto* name : {"enc.level_emb", "enc.subtoken_emb", "enc.type_emb", "dec.subtoken_emb", "out.w", "nop.w"})
    CHECK(model.params().find(name)->grad.norm() > 0.0);

  int checked = 0;
  double worst = 0.0;
  const double h = 1e-4;
  for (auto& p : model.params().all()) {
    for (int s = 0; s < 6 && p.value.size() > 0; ++s) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
      const double analytic = p.grad.data()[i];
      const double saved = p.value.data()[i];
      p.value.data()[i] = saved + h;
      ad::Graph up;
      const double fu = up.scalar(loss(up));
      p.value.data()[i] = saved - h;
      ad::Graph down;
      const double fd = down.scalar(loss(down));
      p.value.data()[i] = saved;
      worst = std::max(worst, relative_error(analytic, (fu - fd) / (2.0 * h)));
      ++checked;
    }
  }
  CHECK(checked > 100);
  CHECK(worst < 1e-3);
}

TEST_CASE("model: heads and ablation limits") {
  Rng rng(13);
  auto examples = testing::random_examples(rng, 3);
  for (double alpha : {0.0, 1.0}) {
    ModelConfig cfg = testing::tiny_config();
    cfg.alpha = alpha;
    TreeBertModel model(cfg, testing::vocab_for(examples), 3);
    model.params().zero_grad();
    ad::Graph g;
    const ForwardOutput out = model.forward(g, model.prepare(examples[0]), false, nullptr);
    CHECK(g.scalar(out.loss) == alpha * g.scalar(out.loss_tmlm) + (1.0 - alpha) * g.scalar(out.loss_nop));
    g.backward(out.loss);
    if (alpha == 1.0) {
      CHECK(model.params().find("nop.w")->grad.isZero());
      CHECK(model.params().find("nop.b")->grad.isZero());
      CHECK(model.params().find("out.w")->grad.norm() > 0.0);
    } else {
      CHECK(model.params().find("out.w")->grad.isZero());
      CHECK(model.params().find("out.b")->grad.isZero());
      CHECK(model.params().find("nop.w")->grad.norm() > 0.0);
    }
  }

  ModelConfig cfg = testing::tiny_config();
  TreeBertModel model(cfg, testing::vocab_for(examples), 3);
  model.params().find("nop.w")->value.setZero();
  model.params().find("nop.b")->value.setZero();
  ad::Graph g;
  const ForwardOutput out = model.forward(g, model.prepare(examples[1]), false, nullptr);
  CHECK(out.nop_probability == 0.5);
  model.params().find("nop.b")->value(0, 0) = 20.0;
  ad::Graph g2;
  const ForwardOutput high = model.forward(g2, model.prepare(examples[1]), false, nullptr);
  CHECK(high.nop_probability > 0.999999);
  CHECK(high.nop_probability < 1.0);
  CHECK(g.value(out.tmlm_logits).rows() == static_cast<Eigen::Index>(examples[1].target.size()));
}

TEST_CASE("model: encoder is equivariant to path order and ignores padding") {
  Rng rng(17);
  auto examples = testing::random_examples(rng, 4);
  ModelConfig cfg = testing::tiny_config();
  cfg.num_layers_enc = 2;
  TreeBertModel model(cfg, testing::vocab_for(examples), 4);
  for (const auto& ex : examples) {
    std::vector<NodePath> paths = ex.masked_paths;
    std::vector<std::size_t> perm(paths.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<NodePath> shuffled;
    for (auto i : perm) shuffled.push_back(paths[i]);

    ad::Graph g;
    const ad::Matrix a = g.value(model.encode(g, model.featurize(paths), false, nullptr));
    const ad::Matrix b = g.value(model.encode(g, model.featurize(shuffled), false, nullptr));
    double worst = 0.0;
    for (std::size_t r = 0; r < perm.size(); ++r)
      worst = std::max(worst, (b.row(static_cast<Eigen::Index>(r)) - a.row(static_cast<Eigen::Index>(perm[r])))
                                  .cwiseAbs()
                                  .maxCoeff());
    CHECK(worst < 1e-6);

    PathSetFeatures padded = model.featurize(paths);
    append_padding_path(padded);
    const ad::Matrix c = g.value(model.encode(g, padded, false, nullptr));
    CHECK(c.rows() == a.rows() + 1);
    CHECK((c.topRows(a.rows()) - a).cwiseAbs().maxCoeff() < 1e-12);
  }
  ad::Graph g;
  const ad::Matrix one = g.value(model.encode(g, model.featurize({examples[0].paths[0]}), false, nullptr));
  CHECK(one.rows() == 1);
  CHECK(one.cols() == cfg.hidden);
}

TEST_CASE("model: decoder is causal and reads the memory") {
  Rng rng(19);
  auto examples = testing::random_examples(rng, 2);
  TreeBertModel model(testing::tiny_config(), testing::vocab_for(examples), 5);
  ModelInput in = model.prepare(examples[0]);
  ad::Graph g;
  const ad::Var memory = model.encode(g, in.paths, false, nullptr);
  const ad::Matrix base = g.value(model.decode(g, memory, in.paths.path_valid, in.decoder_bags, false, nullptr).logits);
  CHECK(base.rows() == static_cast<Eigen::Index>(in.decoder_bags.size()));

  auto changed = in.decoder_bags;
  const std::size_t t = changed.size() / 2;
  changed[t] = model.decoder_bag("zzz_other");
  const ad::Matrix perturbed = g.value(model.decode(g, memory, in.paths.path_valid, changed, false, nullptr).logits);
  const auto rows = static_cast<Eigen::Index>(t);
  CHECK((perturbed.topRows(rows) - base.topRows(rows)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((perturbed.bottomRows(base.rows() - rows) - base.bottomRows(base.rows() - rows)).cwiseAbs().maxCoeff() > 0.0);

  const ad::Var zero = g.constant(ad::Matrix::Zero(g.value(memory).rows(), g.value(memory).cols()));
  const ad::Matrix blank = g.value(model.decode(g, zero, in.paths.path_valid, in.decoder_bags, false, nullptr).logits);
  CHECK((blank - base).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("model: evaluation mode is deterministic and dropout is seeded") {
  Rng rng(23);
  auto examples = testing::random_examples(rng, 2);
  ModelConfig cfg = testing::tiny_config();
  cfg.dropout = 0.3;
  TreeBertModel model(cfg, testing::vocab_for(examples), 6);
  const ModelInput in = model.prepare(examples[0]);
  ad::Graph g1, g2;
  const double a = g1.scalar(model.forward(g1, in, false, nullptr).loss);
  const double b = g2.scalar(model.forward(g2, in, false, nullptr).loss);
  CHECK(a == b);
  Rng r1(9), r2(9);
  ad::Graph g3, g4;
  const double c = g3.scalar(model.forward(g3, in, true, &r1).loss);
  const double d = g4.scalar(model.forward(g4, in, true, &r2).loss);
  CHECK(c == d);
  CHECK(c != a);
  CHECK_THROWS(model.forward(g3, in, true, nullptr));
}

TEST_CASE("model: configuration and shape errors") {
  ModelConfig cfg = testing::tiny_config();
  cfg.heads = 3;
  CHECK_THROWS(cfg.validate());
  cfg = testing::tiny_config();
  cfg.alpha = 1.5;
  CHECK_THROWS(cfg.validate());
  CHECK(ModelConfig::from_json(testing::tiny_config().to_json()).to_json() == testing::tiny_config().to_json());

  Rng rng(29);
  auto examples = testing::random_examples(rng, 1);
  cfg = testing::tiny_config();
  cfg.max_nodes = 3;
  TreeBertModel narrow(cfg, testing::vocab_for(examples), 1);
  CHECK_THROWS_AS(narrow.featurize(examples[0].paths), ShapeMismatch);
  TreeBertModel wide(testing::tiny_config(), testing::vocab_for(examples), 1);
  ad::Graph g;
  CHECK_THROWS_AS(narrow.encode(g, wide.featurize(examples[0].paths), false, nullptr), ShapeMismatch);
}

TEST_CASE("model: tied output head") {
  Rng rng(31);
  auto examples = testing::random_examples(rng, 2);
  ModelConfig cfg = testing::tiny_config();
  cfg.tie_output = true;
  TreeBertModel model(cfg, testing::vocab_for(examples), 7);
  CHECK(model.params().find("out.w") == nullptr);
  const ModelInput in = model.prepare(examples[0]);
  const double worst = [&] {
    double w = 0.0;
    auto loss = [&](ad::Graph& g) { return model.forward(g, in, false, nullptr).loss; };
    model.params().zero_grad();
    ad::Graph g;
    g.backward(loss(g));
    ad::Parameter* emb = model.params().find("dec.subtoken_emb");
    for (int s = 0; s < 20; ++s) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(emb->value.size())));
      const double saved = emb->value.data()[i];
      emb->value.data()[i] = saved + 1e-4;
      ad::Graph up;
      const double fu = up.scalar(loss(up));
      emb->value.data()[i] = saved - 1e-4;
      ad::Graph down;
      const double fd = down.scalar(loss(down));
      emb->value.data()[i] = saved;
      w = std::max(w, relative_error(emb->grad.data()[i], (fu - fd) / 2e-4));
    }
    return w;
  }();
  CHECK(worst < 1e-3);
}

TEST_CASE("checkpoint: round trip is exact at float precision") {
  Rng rng(37);
  auto examples = testing::random_examples(rng, 3);
  TreeBertModel model(testing::tiny_config(), testing::vocab_for(examples, 10), 8);
  const std::string bytes = serialize_checkpoint(model, {{"note", "x"}});
  CHECK(bytes.substr(0, 8) == "TBCKPT01");
  nlohmann::json meta;
  TreeBertModel back = deserialize_checkpoint(bytes, &meta);
  CHECK(meta["note"] == "x");
  CHECK(back.config().to_json() == model.config().to_json());
  CHECK(back.vocab().subtokens.serialize() == model.vocab().subtokens.serialize());
  CHECK(back.vocab().tokens.tokens() == model.vocab().tokens.tokens());
  CHECK(back.vocab().types.names() == model.vocab().types.names());
  REQUIRE(back.params().all().size() == model.params().all().size());
  for (std::size_t i = 0; i < model.params().all().size(); ++i) {
    const auto& p = model.params().all()[i];
    const auto& q = back.params().all()[i];
    CHECK(p.name == q.name);
    CHECK((p.value.cast<float>().cast<double>() - q.value).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(serialize_checkpoint(back, {{"note", "x"}}) == bytes);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(deserialize_checkpoint("NOTACKPT" + bytes.substr(8)), Error);
}
