#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace shj {

enum class TokenKind { number, identifier, op, paren, comma };

struct Token {
  TokenKind kind;
  std::string lexeme;
  std::size_t offset;

  bool operator==(const Token&) const = default;
};

/// Splits `source` into tokens, skipping whitespace. Throws LexError on an illegal character.
std::vector<Token> tokenize(std::string_view source);

enum class ExprKind { constant, variable, negate, binary, call };

/// Expression tree. Binary nodes store the operator in `op` ('+', '-', '*', '/', '^');
/// call nodes store the function name in `name` and one child.
struct Expr {
  ExprKind kind = ExprKind::constant;
  double value = 0.0;
  std::string name;
  char op = 0;
  std::vector<Expr> children;
  std::size_t offset = 0;

  /// Structural equality; source offsets are ignored.
  bool operator==(const Expr& other) const;
};

/// Recursive-descent parser. Throws ParseError with the offending offset.
///
///   expr  := term (('+'|'-') term)*
///   term  := unary (('*'|'/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' unary)?
///   atom  := number | ident | ident '(' expr ')' | '(' expr ')'
///
/// '^' is right-associative and binds tighter than unary minus, so -q1^2 is -(q1^2)
/// and 2^-1 is 0.5.
Expr parse(const std::vector<Token>& tokens);

Expr parse(std::string_view source);

/// Fully parenthesized text form; parse(print(e)) == e.
std::string print(const Expr& e);

/// Evaluates a tree whose only variables are in `names` (bound to `values`).
/// Reference evaluator used for testing the compiled form.
double evaluate(const Expr& e, const std::vector<std::string>& names,
                const std::vector<double>& values);

}  // namespace shj
