#pragma once

#include "treebert/ast.hpp"

#include <span>
#include <string>
#include <vector>

namespace treebert {

/// Token range [begin, end) of one top-level statement.
struct StatementSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_function = false;
};

struct ToyModule {
  AstTree tree;
  std::vector<StatementSpan> statements;
};

/// Parses the python-flavoured toy language (assignments, calls, if/elif/else,
/// while, for, def, return, literals) from the token stream produced by
/// tokenize_code. Function definitions carry their name as value so that
/// paths render them by name.
///
/// Throws ParseError carrying the offending token index.
ToyModule parse_toy_module(std::span<const std::string> tokens);

inline AstTree parse_toy_source(std::span<const std::string> tokens) {
  return parse_toy_module(tokens).tree;
}

}  // namespace treebert
