#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treebert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnbalancedIndentation : public Error {
 public:
  UnbalancedIndentation(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t token_index, const std::string& what)
      : Error("token " + std::to_string(token_index) + ": " + what),
        token_index_(token_index) {}
  std::size_t token_index() const noexcept { return token_index_; }

 private:
  std::size_t token_index_;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& node_path, const std::string& what)
      : Error(node_path + ": " + what), node_path_(node_path) {}
  const std::string& node_path() const noexcept { return node_path_; }

 private:
  std::string node_path_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus is empty") {}
};

class HeightExceeded : public Error {
 public:
  HeightExceeded(int height, int max_height)
      : Error("tree height " + std::to_string(height) + " exceeds maximum " +
              std::to_string(max_height)) {}
};

class CodeTooLong : public Error {
 public:
  CodeTooLong(std::size_t length, std::size_t limit)
      : Error("code length " + std::to_string(length) + " exceeds limit " +
              std::to_string(limit)) {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  explicit Divergence(long step)
      : Error("loss became non-finite at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class VocabMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace treebert
