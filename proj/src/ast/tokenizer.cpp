#include "treebert/tokenizer.hpp"

#include "treebert/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace treebert {
namespace {

constexpr std::array<std::string_view, 22> kOperators = {
    "==", "!=", "<=", ">=", "->", "**", "//", "+=", "-=", "*=", "/=",
    "&&", "||", "++", "--", "<<", ">>", "::", "%=", "&=", "|=", "^="};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

/// Lexes one line (or a whole file for brace languages) into `out`.
/// `block_comment` carries /* */ state across calls.
void lex(std::string_view text, bool hash_comments, bool slash_comments, bool& block_comment,
         std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (block_comment) {
      auto end = text.find("*/", i);
      if (end == std::string_view::npos) return;
      block_comment = false;
      i = end + 2;
      continue;
    }
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (hash_comments && c == '#') {
      auto nl = text.find('\n', i);
      if (nl == std::string_view::npos) return;
      i = nl;
      continue;
    }
    if (slash_comments && text.substr(i, 2) == "//") {
      auto nl = text.find('\n', i);
      if (nl == std::string_view::npos) return;
      i = nl;
      continue;
    }
    if (slash_comments && text.substr(i, 2) == "/*") {
      block_comment = true;
      i += 2;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && (is_ident_char(text[j]) || text[j] == '.')) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::string literal(1, c);
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != c && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < text.size()) {
          literal += text[j];
          ++j;
        }
        literal += text[j] == ' ' ? '_' : text[j];
        ++j;
      }
      if (j < text.size() && text[j] == c) {
        literal += c;
        ++j;
      }
      out.push_back(std::move(literal));
      i = j;
      continue;
    }
    std::string_view two = text.substr(i, 2);
    if (std::find(kOperators.begin(), kOperators.end(), two) != kOperators.end()) {
      out.emplace_back(two);
      i += 2;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
}

/// Column width of leading whitespace; tabs advance to the next multiple of 4.
std::size_t indent_width(std::string_view line) {
  std::size_t width = 0;
  for (char c : line) {
    if (c == ' ')
      ++width;
    else if (c == '\t')
      width = (width / 4 + 1) * 4;
    else
      break;
  }
  return width;
}

std::vector<std::string> tokenize_python(std::string_view source) {
  std::vector<std::string> out;
  std::vector<std::size_t> stack{0};
  bool first = true;
  bool no_block = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto nl = source.find('\n', pos);
    if (nl == std::string_view::npos) nl = source.size();
    std::string_view line = source.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    std::vector<std::string> tokens;
    lex(line, true, false, no_block, tokens);
    if (tokens.empty()) continue;

    const std::size_t width = indent_width(line);
    if (first) {
      if (width != 0) throw UnbalancedIndentation(line_no, "unexpected indent on first line");
      first = false;
    } else {
      out.emplace_back(kNewline);
      if (width > stack.back()) {
        stack.push_back(width);
        out.emplace_back(kIndent);
      } else {
        while (width < stack.back()) {
          stack.pop_back();
          out.emplace_back(kDedent);
        }
        if (width != stack.back())
          throw UnbalancedIndentation(line_no, "dedent does not match any outer indentation level");
      }
    }
    std::move(tokens.begin(), tokens.end(), std::back_inserter(out));
  }
  for (std::size_t i = 1; i < stack.size(); ++i) out.emplace_back(kDedent);
  return out;
}

bool is_keyword(std::string_view t) {
  static constexpr std::array<std::string_view, 16> kKeywords = {
      "if", "elif", "else", "while", "for", "in", "return", "and",
      "or", "not", "def", "import", "from", "lambda", "assert", "del"};
  return std::find(kKeywords.begin(), kKeywords.end(), t) != kKeywords.end();
}

bool attaches_call(std::string_view prev) {
  if (prev.empty()) return false;
  if (prev == ")" || prev == "]") return true;
  if (prev.front() == '"' || prev.front() == '\'') return true;
  return is_ident_start(prev.front()) && !is_keyword(prev);
}

bool needs_space(std::string_view prev, std::string_view next) {
  if (next == ")" || next == "]" || next == "," || next == ":" || next == ".") return false;
  if (prev == "(" || prev == "[" || prev == ".") return false;
  if ((next == "(" || next == "[") && attaches_call(prev)) return false;
  return true;
}

}  // namespace

std::vector<std::string> tokenize_code(std::string_view source, Language language) {
  if (language == Language::python) return tokenize_python(source);
  std::vector<std::string> out;
  bool block_comment = false;
  lex(source, false, true, block_comment, out);
  return out;
}

std::vector<std::string> split_pretokenized(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  int depth = 0;
  bool line_start = true;
  std::string_view prev;
  for (const auto& token : tokens) {
    if (token == kNewline) {
      line_start = true;
      continue;
    }
    if (token == kIndent) {
      ++depth;
      continue;
    }
    if (token == kDedent) {
      --depth;
      continue;
    }
    if (line_start) {
      if (!out.empty()) out += '\n';
      out.append(static_cast<std::size_t>(std::max(depth, 0)) * 4, ' ');
      line_start = false;
    } else if (needs_space(prev, token)) {
      out += ' ';
    }
    out += token;
    prev = token;
  }
  return out;
}

std::string_view language_token(Language language) {
  switch (language) {
    case Language::python: return "[PLT]";
    case Language::java: return "[JLT]";
    case Language::unseen: return "[UNK]";
  }
  return "[UNK]";
}

std::string_view language_tag(Language language) {
  switch (language) {
    case Language::python: return "PLT";
    case Language::java: return "JLT";
    case Language::unseen: return "UNK";
  }
  return "UNK";
}

Language parse_language(std::string_view name) {
  if (name == "python" || name == "PLT") return Language::python;
  if (name == "java" || name == "JLT") return Language::java;
  if (name == "unseen" || name == "UNK") return Language::unseen;
  throw Error("unknown language '" + std::string(name) + "'");
}

}  // namespace treebert
