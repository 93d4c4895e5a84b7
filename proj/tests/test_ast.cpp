#include "support/generators.hpp"

#include "treebert/errors.hpp"
#include "treebert/ingest.hpp"
#include "treebert/jsonl.hpp"
#include "treebert/paths.hpp"
#include "treebert/tokenizer.hpp"
#include "treebert/toy_parser.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>

using namespace treebert;
using Tokens = std::vector<std::string>;

namespace {

std::vector<std::string> labels(const NodePath& p) {
  std::vector<std::string> out;
  for (const auto& n : p.nodes) out.push_back(n.label);
  return out;
}

// Brute-force terminal enumeration, independent of extract_paths.
void terminals(const AstNode& node, std::vector<std::string> prefix, std::vector<std::vector<std::string>>& out) {
  prefix.push_back(node.renders_value() ? *node.value : node.type_name);
  if (node.is_terminal()) {
    out.push_back(prefix);
    return;
  }
  for (const auto& c : node.children) terminals(c, prefix, out);
}

}  // namespace

TEST_CASE("tokenizer: indentation becomes layout tokens") {
  CHECK(tokenize_code("if x:\n    y = 1", Language::python) ==
        Tokens{"if", "x", ":", "NEWLINE", "INDENT", "y", "=", "1", "DEDENT"});
  CHECK(tokenize_code("", Language::python).empty());
  CHECK(tokenize_code("s = \"a b\"", Language::python) == Tokens{"s", "=", "\"a_b\""});
}

TEST_CASE("tokenizer: comments and blank lines are dropped") {
  const auto tokens = tokenize_code("x = 1  # set x\n\n# note\ny = 2\n", Language::python);
  CHECK(tokens == Tokens{"x", "=", "1", "NEWLINE", "y", "=", "2"});
}

TEST_CASE("tokenizer: nested blocks close with one dedent per level") {
  const auto tokens = tokenize_code("def f(a):\n    if a:\n        return a\n    return 0\nz = 1", Language::python);
  CHECK(tokens == Tokens{"def", "f", "(", "a", ")", ":", "NEWLINE", "INDENT", "if", "a", ":", "NEWLINE", "INDENT",
                         "return", "a", "NEWLINE", "DEDENT", "return", "0", "NEWLINE", "DEDENT", "z", "=", "1"});
}

TEST_CASE("tokenizer: dedent to an unknown level throws") {
  CHECK_THROWS_AS(tokenize_code("if x:\n        y = 1\n    z = 2", Language::python), UnbalancedIndentation);
}

TEST_CASE("tokenizer: brace languages have no layout tokens") {
  const auto tokens = tokenize_code("int f() { // c\n  return a /* b */ + 1;\n}", Language::java);
  CHECK(tokens == Tokens{"int", "f", "(", ")", "{", "return", "a", "+", "1", ";", "}"});
}

TEST_CASE("tokenizer: detokenize inverts tokenize on random programs") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::string src = testing::random_program(rng);
    for (auto [from, to] : {std::pair{"\"hello world\"", "\"hello\""}, std::pair{"'x y z'", "'xyz'"}}) {
      for (auto pos = src.find(from); pos != std::string::npos; pos = src.find(from))
        src.replace(pos, std::string(from).size(), to);
    }
    const std::string expected = src.substr(0, src.size() - 1);  // generator ends with a newline
    CHECK(detokenize(tokenize_code(src, Language::python)) == expected);
  }
}

TEST_CASE("parser: assignment") {
  AstTree tree = parse_toy_source(Tokens{"x", "=", "1"});
  const AstNode& root = tree.root();
  CHECK(root.type_name == "Module");
  REQUIRE(root.children.size() == 1);
  const AstNode& assign = root.children[0];
  CHECK(assign.type_name == "Assign");
  REQUIRE(assign.children.size() == 2);
  CHECK(assign.children[0].type_name == "Name");
  CHECK(*assign.children[0].value == "x");
  CHECK(assign.children[1].type_name == "Num");
  CHECK(*assign.children[1].value == "1");
  CHECK(tree.height() == 2);
  CHECK(tree.node_count() == 4);
}

TEST_CASE("parser: empty module is a single node") {
  AstTree tree = parse_toy_source(Tokens{});
  CHECK(tree.node_count() == 1);
  CHECK(tree.height() == 0);
}

TEST_CASE("parser: function definitions render by name") {
  AstTree tree = parse_toy_source(tokenize_code("def f():\n    return 1", Language::python));
  const AstNode& def = tree.root().children.at(0);
  CHECK(def.type_name == "FunctionDef");
  CHECK(def.renders_value());
  CHECK(def.label() == "f");
  const PathSet ps = extract_paths(tree, 100, 20);
  REQUIRE(ps.paths.size() == 1);
  CHECK(labels(ps.paths[0]) == Tokens{"Module", "f", "body", "Return", "1"});
  CHECK(ps.paths[0].nodes[1].is_value);
}

TEST_CASE("parser: malformed input reports the token index") {
  try {
    parse_toy_source(Tokens{"x", "=", ")"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.token_index() == 2);
  }
}

TEST_CASE("parser: elif nests an if inside orelse") {
  AstTree tree = parse_toy_source(tokenize_code("if a:\n    b = 1\nelif c:\n    d = 2\nelse:\n    e = 3", Language::python));
  const AstNode& top = tree.root().children.at(0);
  REQUIRE(top.children.size() == 3);
  CHECK(top.children[2].type_name == "orelse");
  const AstNode& inner = top.children[2].children.at(0);
  CHECK(inner.type_name == "if");
  CHECK(inner.children.size() == 3);
}

TEST_CASE("parser: random programs reach height 6") {
  Rng rng(3);
  int tall = 0;
  for (int i = 0; i < 200; ++i) {
    AstTree tree = parse_toy_source(tokenize_code(testing::random_program(rng), Language::python));
    if (tree.height() >= 6) ++tall;
  }
  CHECK(tall > 20);
}

TEST_CASE("ast json: minimal document and schema errors") {
  AstTree tree = load_ast_json(R"({"type":"Module","children":[{"type":"Num","value":"1"}]})");
  CHECK(tree.node_count() == 2);
  CHECK(tree.height() == 1);
  try {
    load_ast_json(R"({"type":"Num"})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.node_path() == "$");
  }
  try {
    load_ast_json(R"({"type":"Module","children":[{"type":"Expr","children":[{"type":"Name"}]}]})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.node_path() == "$.children[0].children[0]");
  }
}

TEST_CASE("ast json: round trip preserves the tree") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    AstTree tree(testing::random_tree(rng));
    AstTree back = load_ast_json(ast_to_json(tree.root()).dump());
    CHECK(ast_to_json(back.root()) == ast_to_json(tree.root()));
    CHECK(back.height() == tree.height());
  }
}

TEST_CASE("paths: conditional body down to a call argument") {
  const std::string src =
      "def setup(root):\n"
      "    if debug:\n"
      "        print(third_party_dir)\n";
  AstTree tree = parse_toy_source(tokenize_code(src, Language::python));
  CHECK(tree.height() == 7);
  const PathSet ps = extract_paths(tree, 100, 20);
  CHECK(ps.terminal_count == 4);
  CHECK(labels(ps.paths.back()) ==
        Tokens{"Module", "setup", "body", "if", "body", "Expr", "Call", "third_party_dir"});
  CHECK(labels(ps.paths[0]) == Tokens{"Module", "setup", "arguments", "root"});
  // chain slots: FunctionDef is child 1/1, body 2/2, if 1/1, body 2/2, Expr 1/1, Call 1/1, argument 2/2
  const std::vector<ChildSlot> chain{{1, 1}, {2, 2}, {1, 1}, {2, 2}, {1, 1}, {1, 1}, {2, 2}};
  CHECK(ps.paths.back().chain == chain);
}

TEST_CASE("paths: assignment and a terminal root") {
  AstTree tree = parse_toy_source(Tokens{"x", "=", "1"});
  const PathSet ps = extract_paths(tree, 100, 20);
  REQUIRE(ps.paths.size() == 2);
  CHECK(labels(ps.paths[0]) == Tokens{"Module", "Assign", "x"});
  CHECK(labels(ps.paths[1]) == Tokens{"Module", "Assign", "1"});

  AstTree single(make_leaf("Module", "hello"));
  const PathSet one = extract_paths(single, 100, 20);
  REQUIRE(one.paths.size() == 1);
  CHECK(labels(one.paths[0]) == Tokens{"hello"});
  CHECK(one.paths[0].chain.empty());
}

TEST_CASE("paths: truncation keeps the root prefix and the terminal") {
  AstNode node = make_leaf("Name", "leaf");
  for (int i = 9; i >= 0; --i) node = make_node("T" + std::to_string(i), {node});
  AstTree tree(node);
  const PathSet ps = extract_paths(tree, 100, 4);
  REQUIRE(ps.paths.size() == 1);
  const NodePath& p = ps.paths[0];
  CHECK(labels(p) == Tokens{"T0", "T1", "T2", "leaf"});
  CHECK(p.chain.size() == 10);
  CHECK(p.level(2) == 2);
  CHECK(p.level(3) == 10);
}

TEST_CASE("paths: max_paths keeps the leftmost terminals") {
  AstTree tree = parse_toy_source(tokenize_code("a = b\nc = d\ne = f", Language::python));
  const PathSet ps = extract_paths(tree, 4, 20);
  CHECK(ps.terminal_count == 6);
  REQUIRE(ps.paths.size() == 4);
  CHECK(ps.paths[3].nodes.back().label == "d");
}

TEST_CASE("paths: property over random trees") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    AstTree tree(testing::random_tree(rng, 7, 4));
    const PathSet ps = extract_paths(tree, 100000, 100);
    std::vector<std::vector<std::string>> expected;
    terminals(tree.root(), {}, expected);
    REQUIRE(ps.paths.size() == expected.size());
    CHECK(ps.terminal_count == tree.terminal_count());
    for (std::size_t k = 0; k < expected.size(); ++k) {
      CHECK(labels(ps.paths[k]) == expected[k]);
      CHECK(ps.paths[k].nodes.back().is_value);
      CHECK(ps.paths[k].nodes.front().label == tree.root().label());
      CHECK(static_cast<int>(ps.paths[k].chain.size()) + 1 == ps.paths[k].length());
    }
    CHECK(extract_paths(tree, 100000, 100) == ps);
  }
}

TEST_CASE("ingest: one record per top-level function") {
  const std::string src = "def f(a):\n    return a\n\ndef g():\n    x = 1\n    return x\n";
  IngestConfig cfg;
  const auto records = ingest_source(src, "two.py", cfg);
  REQUIRE(records.size() == 2);
  CHECK(records[0].code == Tokens{"def", "f", "(", "a", ")", ":", "NEWLINE", "INDENT", "return", "a", "DEDENT"});
  CHECK(records[1].code.back() == "DEDENT");
  CHECK(records[0].paths.paths[0].nodes[0].label == "Module");
  CHECK(records[1].id == "two.py#1");

  const auto whole = ingest_source("x = 1\ny = 2\n", "plain.py", cfg);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].paths.terminal_count == 4);
}

TEST_CASE("ingest: directory with an unparseable file and a JSONL corpus") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "treebert_ingest_test";
  fs::remove_all(dir);
  write_file(dir / "src" / "ok.py", "def f(a):\n    return a\n\ndef g():\n    return 2\n");
  write_file(dir / "src" / "bad.py", "def (:\n");
  IngestResult result = ingest(dir / "src", IngestConfig{});
  CHECK(result.inputs == 2);
  CHECK(result.records.size() == 2);
  CHECK(result.warnings.size() == 1);

  fs::create_directories(dir / "empty");
  CHECK(ingest(dir / "empty", IngestConfig{}).records.empty());

  write_file(dir / "trees.jsonl",
             R"({"type":"Module","children":[{"type":"Num","value":"1"}]})"
             "\n"
             R"({"tree":{"type":"Return","value":"return"},"code":"return","lang":"JLT","id":"r"})"
             "\n"
             R"({"type":"Num"})"
             "\n");
  IngestResult jr = ingest(dir / "trees.jsonl", IngestConfig{});
  REQUIRE(jr.records.size() == 2);
  CHECK(jr.records[0].code == Tokens{"1"});
  CHECK(jr.records[1].language == Language::java);
  CHECK(jr.records[1].id == "r");
  CHECK(jr.warnings.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("ingest: trees taller than the limit are rejected") {
  IngestConfig cfg;
  cfg.max_height = 2;
  CHECK_THROWS_AS(ingest_source("if a:\n    b = 1", "t.py", cfg), HeightExceeded);
}
