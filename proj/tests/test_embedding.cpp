#include "support/generators.hpp"

#include "treebert/embedding.hpp"
#include "treebert/errors.hpp"
#include "treebert/model.hpp"
#include "treebert/position.hpp"

#include <doctest.h>

using namespace treebert;

namespace {

ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng.uniform() - 1.0;
  return m;
}

struct Tables {
  ad::ParameterStore store;
  EmbeddingTables tables;

  Tables(int vocab, int types, int max_height, int max_nodes, int d, Rng& rng) {
    tables.subtokens = &store.add("sub", random_matrix(vocab, d, rng));
    tables.types = &store.add("type", random_matrix(types, d, rng));
    tables.levels = &store.add("level", random_matrix(max_height + 1, d, rng));
    tables.learned_positions = &store.add("pos", random_matrix(max_nodes, d, rng));
  }
};

// Positions of the nodes on every root-to-terminal path, by direct recursion.
void path_positions(const AstNode& node, int level, const Eigen::RowVectorXd& pos, const ad::Matrix& levels,
                    std::vector<Eigen::RowVectorXd> prefix, std::vector<std::vector<Eigen::RowVectorXd>>& out) {
  prefix.push_back(pos);
  if (node.is_terminal()) {
    out.push_back(prefix);
    return;
  }
  const double c = static_cast<double>(node.children.size());
  for (std::size_t i = 1; i <= node.children.size(); ++i) {
    const Eigen::RowVectorXd child =
        (c - static_cast<double>(i) + 1.0) / (c + 1.0) * pos + static_cast<double>(i) / (c + 1.0) * levels.row(level + 1);
    path_positions(node.children[i - 1], level + 1, child, levels, prefix, out);
  }
}

}  // namespace

TEST_CASE("position: child weights") {
  const ChildWeights one = child_weights(1, 1);
  CHECK(one.parent_weight() == 0.5);
  CHECK(one.level_weight() == 0.5);
  const int expected[3][2] = {{3, 1}, {2, 2}, {1, 3}};
  for (int i = 1; i <= 3; ++i) {
    const ChildWeights w = child_weights(i, 3);
    CHECK(w.denominator == 4);
    CHECK(w.parent_numerator == expected[i - 1][0]);
    CHECK(w.level_numerator == expected[i - 1][1]);
  }
  CHECK_THROWS(child_weights(0, 3));
  CHECK_THROWS(child_weights(4, 3));
}

TEST_CASE("position: root is level row 0 and coefficients are convex") {
  Rng rng(2);
  const ad::Matrix levels = random_matrix(9, 5, rng);
  const Eigen::RowVectorXd root = position_coefficients(std::span<const ChildSlot>{}, 8);
  CHECK(root(0) == 1.0);
  CHECK(root.sum() == 1.0);
  for (int i = 0; i < 100; ++i) {
    AstTree tree(testing::random_tree(rng, 8, 5));
    const auto direct = node_position_embeddings(tree, levels);
    CHECK(direct[0] == Eigen::RowVectorXd(levels.row(0)));
    const PathSet ps = extract_paths(tree, 100000, 100);
    std::vector<std::vector<Eigen::RowVectorXd>> oracle;
    path_positions(tree.root(), 0, levels.row(0), levels, {}, oracle);
    REQUIRE(oracle.size() == ps.paths.size());
    for (std::size_t p = 0; p < ps.paths.size(); ++p) {
      for (int k = 0; k < ps.paths[p].length(); ++k) {
        const Eigen::RowVectorXd coef = position_coefficients(ps.paths[p].ancestry(k), 8);
        CHECK(std::abs(coef.sum() - 1.0) < 1e-12);
        CHECK((coef.array() >= 0.0).all());
        CHECK((coef * levels - oracle[p][static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("position: siblings are pairwise distinct") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const ad::Matrix levels = random_matrix(4, 6, rng);
    const int c = 2 + static_cast<int>(rng.below(30));
    std::vector<AstNode> children;
    for (int i = 0; i < c; ++i) children.push_back(make_leaf("Name", "v"));
    AstTree tree(make_node("Module", std::move(children)));
    const auto pos = node_position_embeddings(tree, levels);
    for (int i = 1; i <= c; ++i)
      for (int j = i + 1; j <= c; ++j)
        CHECK((pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(j)]).norm() > 1e-9);
  }
}

TEST_CASE("position: wide nodes and height limit") {
  Rng rng(6);
  const ad::Matrix levels = random_matrix(3, 4, rng);
  std::vector<AstNode> children;
  for (int i = 0; i < 500; ++i) children.push_back(make_leaf("Num", std::to_string(i)));
  AstTree wide(make_node("List", std::move(children)));
  const auto pos = node_position_embeddings(wide, levels);
  CHECK(pos.size() == 501);
  CHECK(pos.back().allFinite());

  AstTree tall(make_node("A", {make_node("B", {make_node("C", {make_leaf("D", "x")})})}));
  CHECK_THROWS_AS(node_position_embeddings(tall, levels), HeightExceeded);
  const std::vector<ChildSlot> deep(3, ChildSlot{1, 1});
  CHECK_THROWS_AS(position_coefficients(deep, 2), HeightExceeded);
}

TEST_CASE("embedding: token vectors sum subtoken rows") {
  std::vector<std::string> corpus;
  for (int i = 0; i < 5; ++i) {
    corpus.push_back("third");
    corpus.push_back("party");
  }
  corpus.push_back("third_party");
  const SubtokenVocab vocab = learn_bpe(corpus, 8);
  Rng rng(8);
  Tables t(vocab.size(), 3, 4, 5, 6, rng);
  const ad::Matrix& e = t.tables.subtokens->value;
  CHECK(token_vector(t.tables, vocab, "party") == Eigen::RowVectorXd(e.row(vocab.id("party"))));
  const Eigen::RowVectorXd sum = e.row(vocab.id("third")) + e.row(vocab.id("_")) + e.row(vocab.id("party"));
  CHECK((token_vector(t.tables, vocab, "third_party") - sum).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(token_vector(t.tables, vocab, "partythird") == token_vector(t.tables, vocab, "partythird"));
}

TEST_CASE("embedding: path matrices") {
  const SubtokenVocab vocab = learn_bpe(std::vector<std::string>{"x", "y"}, 0);
  Rng rng(10);
  TypeVocab types(std::vector<std::string>{"Assign", "Module", "Name"});
  Tables t(vocab.size(), types.size(), 6, 5, 4, rng);

  NodePath single{{PathNode{"x", true}}, {}};
  const PositionedPathMatrix m1 = build_path_matrix(single, t.tables, vocab, types, 5);
  CHECK(m1.values.row(0).norm() > 0.0);
  CHECK(m1.values.bottomRows(4).isZero());
  CHECK(m1.pad_mask == std::vector<bool>{false, true, true, true, true});

  // The same label in two tree positions: equal node vectors, different rows.
  AstTree tree = AstTree(make_node("Module", {make_node("Assign", {make_leaf("Name", "x"), make_leaf("Name", "x")})}));
  const PathSet ps = extract_paths(tree, 10, 5);
  const auto a = build_path_matrix(ps.paths[0], t.tables, vocab, types, 5);
  const auto b = build_path_matrix(ps.paths[1], t.tables, vocab, types, 5);
  CHECK(a.values.row(0) == b.values.row(0));
  CHECK(a.values.row(1) == b.values.row(1));
  CHECK((a.values.row(2) - b.values.row(2)).norm() > 1e-9);
  const Eigen::RowVectorXd node = token_vector(t.tables, vocab, "x");
  const auto levels = t.tables.levels->value;
  const auto pos = node_position_embeddings(tree, levels);
  CHECK((a.values.row(2) - (node + pos[2])).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.values.row(2) - (node + pos[3])).cwiseAbs().maxCoeff() < 1e-12);

  NodePath too_long{std::vector<PathNode>(6, PathNode{"Module", false}), std::vector<ChildSlot>(5)};
  CHECK_THROWS_AS(build_path_matrix(too_long, t.tables, vocab, types, 5), ShapeMismatch);
}

TEST_CASE("embedding: graph path embedding matches the direct layout") {
  const SubtokenVocab vocab = learn_bpe(std::vector<std::string>{"total", "items", "count"}, 6);
  Rng rng(12);
  for (PositionMode mode : {PositionMode::tree, PositionMode::learned}) {
    for (int trial = 0; trial < 20; ++trial) {
      CorpusRecord r = testing::random_record(rng, "r", 30, 6);
      TypeVocab types = TypeVocab::from_paths({r.paths.paths});
      Tables t(vocab.size(), types.size(), 40, 6, 3, rng);
      SplitCache cache(vocab);
      const PathSetFeatures f = featurize_paths(r.paths.paths, cache, types, 6, 40);
      ad::Graph g;
      const ad::Matrix got = g.value(embed_paths(g, t.tables, f, mode));
      REQUIRE(got.rows() == static_cast<Eigen::Index>(r.paths.paths.size()));
      REQUIRE(got.cols() == 18);
      for (std::size_t p = 0; p < r.paths.paths.size(); ++p) {
        const auto m = build_path_matrix(r.paths.paths[p], t.tables, vocab, types, 6, mode);
        const ad::Matrix flat = Eigen::Map<const ad::Matrix>(m.values.data(), 1, m.values.size());
        CHECK((got.row(static_cast<Eigen::Index>(p)) - flat).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("embedding: masked nodes keep their position") {
  const SubtokenVocab vocab = learn_bpe(std::vector<std::string>{"x"}, 0);
  Rng rng(14);
  TypeVocab types(std::vector<std::string>{"Assign", "Module"});
  Tables t(vocab.size(), types.size(), 4, 3, 4, rng);
  NodePath p{{{"Module", false}, {"Assign", false}, {"x", true}}, {{1, 1}, {2, 2}}};
  NodePath masked = p;
  masked.nodes[1] = PathNode{"[mask]", false};
  const auto a = build_path_matrix(p, t.tables, vocab, types, 3);
  const auto b = build_path_matrix(masked, t.tables, vocab, types, 3);
  const Eigen::RowVectorXd pos = position_coefficients(p.ancestry(1), 4) * t.tables.levels->value;
  CHECK((b.values.row(1) - (t.tables.subtokens->value.row(special::kMask) + pos)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.values.row(2) == b.values.row(2));
}

TEST_CASE("embedding: position parameters scale with height only") {
  CHECK(position_parameter_count(32, 64) == 33 * 64);
  ModelConfig cfg;
  cfg.hidden = 16;
  cfg.heads = 2;
  cfg.d_node = 8;
  cfg.max_height = 12;
  cfg.max_nodes = 5;
  cfg.max_paths = 10;
  cfg.num_layers_enc = cfg.num_layers_dec = 1;
  Vocabularies vocab{learn_bpe(std::vector<std::string>{"a"}, 0), TypeVocab{}, TokenVocab{}};
  TreeBertModel model(cfg, vocab, 1);
  const ad::Parameter* levels = model.params().find("enc.level_emb");
  REQUIRE(levels != nullptr);
  CHECK(levels->value.size() == position_parameter_count(12, 8));
  CHECK(model.params().find("enc.learned_pos") == nullptr);
}
