#include "shj/expression.hpp"

#include "shj/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace shj {

namespace {

bool is_function(const std::string& name) {
  return name == "sin" || name == "cos" || name == "exp" || name == "log" || name == "sqrt";
}

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, std::size_t end_offset)
      : tokens_(tokens), end_offset_(end_offset) {}

  Expr run() {
    if (tokens_.empty()) throw ParseError("empty expression", 0);
    Expr e = expr();
    if (pos_ != tokens_.size()) throw ParseError("unexpected token '" + peek().lexeme + "'", peek().offset);
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool at_end() const { return pos_ >= tokens_.size(); }
  std::size_t here() const { return at_end() ? end_offset_ : peek().offset; }

  bool accept_op(char c) {
    if (!at_end() && peek().kind == TokenKind::op && peek().lexeme[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_paren(char c) {
    if (!at_end() && peek().kind == TokenKind::paren && peek().lexeme[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static Expr binary(char op, Expr lhs, Expr rhs, std::size_t offset) {
    Expr e;
    e.kind = ExprKind::binary;
    e.op = op;
    e.offset = offset;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    return e;
  }

  Expr expr() {
    Expr lhs = term();
    while (!at_end()) {
      const std::size_t off = peek().offset;
      if (accept_op('+')) {
        lhs = binary('+', std::move(lhs), term(), off);
      } else if (accept_op('-')) {
        lhs = binary('-', std::move(lhs), term(), off);
      } else {
        break;
      }
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (!at_end()) {
      const std::size_t off = peek().offset;
      if (accept_op('*')) {
        lhs = binary('*', std::move(lhs), unary(), off);
      } else if (accept_op('/')) {
        lhs = binary('/', std::move(lhs), unary(), off);
      } else {
        break;
      }
    }
    return lhs;
  }

  Expr unary() {
    const std::size_t off = here();
    if (accept_op('-')) {
      Expr e;
      e.kind = ExprKind::negate;
      e.offset = off;
      e.children.push_back(unary());
      return e;
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    const std::size_t off = here();
    if (accept_op('^')) return binary('^', std::move(base), unary(), off);
    return base;
  }

  Expr atom() {
    if (at_end()) throw ParseError("unexpected end of input", end_offset_);
    const Token& tok = peek();
    Expr e;
    e.offset = tok.offset;
    switch (tok.kind) {
      case TokenKind::number:
        ++pos_;
        e.kind = ExprKind::constant;
        e.value = std::strtod(tok.lexeme.c_str(), nullptr);
        return e;
      case TokenKind::identifier:
        ++pos_;
        if (accept_paren('(')) {
          if (!is_function(tok.lexeme)) throw ParseError("unknown function '" + tok.lexeme + "'", tok.offset);
          e.kind = ExprKind::call;
          e.name = tok.lexeme;
          e.children.push_back(expr());
          if (!accept_paren(')')) throw ParseError("expected ')'", here());
          return e;
        }
        e.kind = ExprKind::variable;
        e.name = tok.lexeme;
        return e;
      case TokenKind::paren:
        if (tok.lexeme == "(") {
          ++pos_;
          Expr inner = expr();
          if (!accept_paren(')')) throw ParseError("expected ')'", here());
          return inner;
        }
        break;
      default:
        break;
    }
    throw ParseError("unexpected token '" + tok.lexeme + "'", tok.offset);
  }

  const std::vector<Token>& tokens_;
  std::size_t end_offset_;
  std::size_t pos_ = 0;
};

}  // namespace

bool Expr::operator==(const Expr& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case ExprKind::constant:
      return value == other.value;
    case ExprKind::variable:
      return name == other.name;
    case ExprKind::negate:
      return children == other.children;
    case ExprKind::binary:
      return op == other.op && children == other.children;
    case ExprKind::call:
      return name == other.name && children == other.children;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view source) {
  if (source.empty()) throw LexError("empty source", 0);
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = source.size();
  auto digit = [&](std::size_t k) { return k < n && std::isdigit(static_cast<unsigned char>(source[k])); };
  while (i < n) {
    const char c = source[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (digit(i) || (c == '.' && digit(i + 1))) {
      while (digit(i)) ++i;
      if (i < n && source[i] == '.') {
        ++i;
        while (digit(i)) ++i;
      }
      if (i < n && (source[i] == 'e' || source[i] == 'E')) {
        std::size_t k = i + 1;
        if (k < n && (source[k] == '+' || source[k] == '-')) ++k;
        if (digit(k)) {
          i = k;
          while (digit(i)) ++i;
        }
      }
      out.push_back({TokenKind::number, std::string(source.substr(start, i - start)), start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(source[i])) || source[i] == '_')) ++i;
      out.push_back({TokenKind::identifier, std::string(source.substr(start, i - start)), start});
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back({TokenKind::op, std::string(1, c), start});
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({TokenKind::paren, std::string(1, c), start});
      ++i;
    } else if (c == ',') {
      out.push_back({TokenKind::comma, ",", start});
      ++i;
    } else {
      throw LexError(std::string("illegal character '") + c + "'", start);
    }
  }
  return out;
}

Expr parse(const std::vector<Token>& tokens) {
  std::size_t end = 0;
  if (!tokens.empty()) end = tokens.back().offset + tokens.back().lexeme.size();
  return Parser(tokens, end).run();
}

Expr parse(std::string_view source) {
  auto tokens = tokenize(source);
  return Parser(tokens, source.size()).run();
}

std::string print(const Expr& e) {
  switch (e.kind) {
    case ExprKind::constant: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      return buf;
    }
    case ExprKind::variable:
      return e.name;
    case ExprKind::negate:
      return "(-" + print(e.children[0]) + ")";
    case ExprKind::binary:
      return "(" + print(e.children[0]) + e.op + print(e.children[1]) + ")";
    case ExprKind::call:
      return e.name + "(" + print(e.children[0]) + ")";
  }
  return {};
}

double evaluate(const Expr& e, const std::vector<std::string>& names,
                const std::vector<double>& values) {
  switch (e.kind) {
    case ExprKind::constant:
      return e.value;
    case ExprKind::variable:
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == e.name) return values[i];
      }
      throw BindError(e.name);
    case ExprKind::negate:
      return -evaluate(e.children[0], names, values);
    case ExprKind::binary: {
      const double a = evaluate(e.children[0], names, values);
      const double b = evaluate(e.children[1], names, values);
      switch (e.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
    case ExprKind::call: {
      const double a = evaluate(e.children[0], names, values);
      if (e.name == "sin") return std::sin(a);
      if (e.name == "cos") return std::cos(a);
      if (e.name == "exp") return std::exp(a);
      if (e.name == "log") return std::log(a);
      return std::sqrt(a);
    }
  }
  return 0.0;
}

}  // namespace shj
