#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shj {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct StateError : Error {
  using Error::Error;
};

/// Error raised by the tokenizer or parser; carries the byte offset into the source.
struct SyntaxError : Error {
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct LexError : SyntaxError {
  using SyntaxError::SyntaxError;
};

struct ParseError : SyntaxError {
  using SyntaxError::SyntaxError;
};

struct BindError : Error {
  explicit BindError(const std::string& name)
      : Error("unbound variable '" + name + "'"), name(name) {}
  std::string name;
};

/// The implicit midpoint solve failed to converge at a given node.
struct StepDivergence : Error {
  StepDivergence(const std::string& what, std::size_t node)
      : Error(what + " (node " + std::to_string(node) + "; try a smaller dt)"), node(node) {}
  std::size_t node;
};

struct TruncationMismatch : Error {
  using Error::Error;
};

struct PdeError : Error {
  using Error::Error;
};

struct TransformError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace shj
