#include "treebert/toy_parser.hpp"

#include "treebert/errors.hpp"
#include "treebert/tokenizer.hpp"

#include <cctype>

namespace treebert {
namespace {

bool is_name(const std::string& t) {
  if (t.empty() || !(std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_')) return false;
  static const std::vector<std::string> kReserved = {
      "def", "if", "elif", "else", "while", "for", "in", "return", "and",
      "or", "not", "pass", "break", "continue", "NEWLINE", "INDENT", "DEDENT"};
  for (const auto& r : kReserved)
    if (t == r) return false;
  return true;
}

bool is_number(const std::string& t) {
  return !t.empty() && std::isdigit(static_cast<unsigned char>(t[0]));
}

bool is_string(const std::string& t) { return !t.empty() && (t[0] == '"' || t[0] == '\''); }

class Parser {
 public:
  explicit Parser(std::span<const std::string> tokens) : tokens_(tokens) {}

  ToyModule module() {
    std::vector<AstNode> body;
    std::vector<StatementSpan> spans;
    while (!at_end()) {
      if (peek_is(kNewline)) {
        ++pos_;
        continue;
      }
      const std::size_t begin = pos_;
      AstNode stmt = statement();
      spans.push_back({begin, pos_, stmt.type_name == "FunctionDef"});
      body.push_back(std::move(stmt));
    }
    AstNode root = body.empty() ? make_leaf("Module", "Module") : make_node("Module", std::move(body));
    return ToyModule{AstTree(std::move(root)), std::move(spans)};
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }
  const std::string& peek() const {
    static const std::string kEnd;
    return at_end() ? kEnd : tokens_[pos_];
  }
  bool peek_is(std::string_view t) const { return !at_end() && tokens_[pos_] == t; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(pos_, what + (at_end() ? " at end of input" : ", found '" + peek() + "'"));
  }

  void expect(std::string_view t) {
    if (!peek_is(t)) fail("expected '" + std::string(t) + "'");
    ++pos_;
  }

  std::string name() {
    if (at_end() || !is_name(peek())) fail("expected identifier");
    return tokens_[pos_++];
  }

  // A simple statement ends at NEWLINE, at a DEDENT that closes its block, or at end of input.
  void end_simple() {
    if (peek_is(kNewline)) {
      ++pos_;
      return;
    }
    if (at_end() || peek_is(kDedent)) return;
    fail("expected end of statement");
  }

  AstNode statement() {
    const std::string& t = peek();
    if (t == "def") return function_def();
    if (t == "if") return if_stmt();
    if (t == "while") return while_stmt();
    if (t == "for") return for_stmt();
    AstNode s = simple_statement();
    end_simple();
    return s;
  }

  AstNode simple_statement() {
    const std::string& t = peek();
    if (t == "return") {
      ++pos_;
      if (at_end() || peek_is(kNewline) || peek_is(kDedent)) return make_leaf("Return", "return");
      return make_node("Return", {expression()});
    }
    if (t == "pass" || t == "break" || t == "continue") {
      std::string word = tokens_[pos_++];
      std::string type = word;
      type[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(type[0])));
      return make_leaf(type, word);
    }
    AstNode target = expression();
    if (peek_is("=")) {
      ++pos_;
      AstNode value = expression();
      return make_node("Assign", {std::move(target), std::move(value)});
    }
    for (std::string_view op : {"+=", "-=", "*=", "/="}) {
      if (peek_is(op)) {
        ++pos_;
        AstNode value = expression();
        return make_node(std::string("AugAssign") + aug_name(op), {std::move(target), std::move(value)});
      }
    }
    return make_node("Expr", {std::move(target)});
  }

  static std::string aug_name(std::string_view op) {
    if (op == "+=") return "Add";
    if (op == "-=") return "Sub";
    if (op == "*=") return "Mult";
    return "Div";
  }

  std::vector<AstNode> suite() {
    expect(":");
    std::vector<AstNode> body;
    if (!peek_is(kNewline)) {
      body.push_back(simple_statement());
      end_simple();
      return body;
    }
    ++pos_;
    expect(kIndent);
    while (!peek_is(kDedent)) {
      if (at_end()) fail("unterminated block");
      if (peek_is(kNewline)) {
        ++pos_;
        continue;
      }
      body.push_back(statement());
    }
    ++pos_;
    return body;
  }

  AstNode function_def() {
    expect("def");
    std::string fname = name();
    expect("(");
    std::vector<AstNode> args;
    if (!peek_is(")")) {
      args.push_back(make_leaf("arg", name()));
      while (peek_is(",")) {
        ++pos_;
        args.push_back(make_leaf("arg", name()));
      }
    }
    expect(")");
    std::vector<AstNode> children;
    if (!args.empty()) children.push_back(make_node("arguments", std::move(args)));
    children.push_back(make_node("body", suite()));
    AstNode def = make_node("FunctionDef", std::move(children));
    def.value = std::move(fname);
    return def;
  }

  AstNode if_stmt() {
    ++pos_;  // 'if' or 'elif'
    AstNode test = expression();
    std::vector<AstNode> children{std::move(test), make_node("body", suite())};
    if (peek_is("elif")) {
      children.push_back(make_node("orelse", {if_stmt()}));
    } else if (peek_is("else")) {
      ++pos_;
      children.push_back(make_node("orelse", suite()));
    }
    return make_node("if", std::move(children));
  }

  AstNode while_stmt() {
    expect("while");
    AstNode test = expression();
    return make_node("while", {std::move(test), make_node("body", suite())});
  }

  AstNode for_stmt() {
    expect("for");
    AstNode target = make_leaf("Name", name());
    expect("in");
    AstNode iter = expression();
    return make_node("for", {std::move(target), std::move(iter), make_node("body", suite())});
  }

  AstNode expression() { return or_expr(); }

  AstNode or_expr() {
    AstNode left = and_expr();
    while (peek_is("or")) {
      ++pos_;
      left = make_node("BoolOpOr", {std::move(left), and_expr()});
    }
    return left;
  }

  AstNode and_expr() {
    AstNode left = not_expr();
    while (peek_is("and")) {
      ++pos_;
      left = make_node("BoolOpAnd", {std::move(left), not_expr()});
    }
    return left;
  }

  AstNode not_expr() {
    if (peek_is("not")) {
      ++pos_;
      return make_node("UnaryOpNot", {not_expr()});
    }
    return comparison();
  }

  AstNode comparison() {
    AstNode left = arith();
    static const std::vector<std::pair<std::string, std::string>> kOps = {
        {"==", "Eq"}, {"!=", "NotEq"}, {"<", "Lt"}, {"<=", "LtE"}, {">", "Gt"}, {">=", "GtE"}};
    for (const auto& [op, suffix] : kOps) {
      if (peek_is(op)) {
        ++pos_;
        return make_node("Compare" + suffix, {std::move(left), arith()});
      }
    }
    return left;
  }

  AstNode arith() {
    AstNode left = term();
    while (peek_is("+") || peek_is("-")) {
      std::string type = peek() == "+" ? "BinOpAdd" : "BinOpSub";
      ++pos_;
      left = make_node(std::move(type), {std::move(left), term()});
    }
    return left;
  }

  AstNode term() {
    AstNode left = factor();
    while (peek_is("*") || peek_is("/") || peek_is("%")) {
      std::string type = peek() == "*" ? "BinOpMult" : peek() == "/" ? "BinOpDiv" : "BinOpMod";
      ++pos_;
      left = make_node(std::move(type), {std::move(left), factor()});
    }
    return left;
  }

  AstNode factor() {
    if (peek_is("-")) {
      ++pos_;
      return make_node("UnaryOpUSub", {factor()});
    }
    return postfix();
  }

  AstNode postfix() {
    AstNode node = atom();
    for (;;) {
      if (peek_is("(")) {
        ++pos_;
        std::vector<AstNode> children{std::move(node)};
        if (!peek_is(")")) {
          children.push_back(expression());
          while (peek_is(",")) {
            ++pos_;
            children.push_back(expression());
          }
        }
        expect(")");
        node = make_node("Call", std::move(children));
      } else if (peek_is(".")) {
        ++pos_;
        node = make_node("Attribute", {std::move(node), make_leaf("attr", name())});
      } else if (peek_is("[")) {
        ++pos_;
        AstNode index = expression();
        expect("]");
        node = make_node("Subscript", {std::move(node), std::move(index)});
      } else {
        return node;
      }
    }
  }

  AstNode atom() {
    if (at_end()) fail("expected expression");
    const std::string& t = peek();
    if (t == "(") {
      ++pos_;
      AstNode inner = expression();
      expect(")");
      return inner;
    }
    if (t == "[") {
      ++pos_;
      std::vector<AstNode> elements;
      if (!peek_is("]")) {
        elements.push_back(expression());
        while (peek_is(",")) {
          ++pos_;
          elements.push_back(expression());
        }
      }
      expect("]");
      if (elements.empty()) return make_leaf("List", "[]");
      return make_node("List", std::move(elements));
    }
    if (t == "True" || t == "False" || t == "None") return make_leaf("NameConstant", tokens_[pos_++]);
    if (is_number(t)) return make_leaf("Num", tokens_[pos_++]);
    if (is_string(t)) return make_leaf("Str", tokens_[pos_++]);
    if (is_name(t)) return make_leaf("Name", tokens_[pos_++]);
    fail("expected expression");
  }

  std::span<const std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

ToyModule parse_toy_module(std::span<const std::string> tokens) { return Parser(tokens).module(); }

}  // namespace treebert
