#include "shj/scalar_field.hpp"

#include "shj/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace shj {

namespace detail {

enum class Op { constant, variable, negate, add, sub, mul, div, pow_const, pow, sin, cos, exp, log, sqrt };

struct Instr {
  Op op;
  int a = -1;
  int b = -1;
  double c = 0.0;  // constant value, or exponent for pow_const
};

struct Program {
  std::vector<Instr> code;
  int slots = 0;
};

}  // namespace detail

namespace {

using detail::Instr;
using detail::Op;

struct Workspace {
  std::vector<double> val, grad, hess;
  void reserve(std::size_t nodes, int m) {
    if (val.size() < nodes) val.resize(nodes);
    if (grad.size() < nodes * m) grad.resize(nodes * m);
    if (hess.size() < nodes * m * m) hess.resize(nodes * m * m);
  }
};

thread_local Workspace tls_workspace;

int slot_of(const std::string& name, int n, VariableSpace space) {
  if (name == "t") return 2 * n;
  if (name.size() < 2) throw BindError(name);
  const char head = name[0];
  const char first = space == VariableSpace::phase ? 'q' : 'a';
  const char second = space == VariableSpace::phase ? 'p' : 'b';
  if (head != first && head != second) throw BindError(name);
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) throw BindError(name);
  }
  if (name[1] == '0') throw BindError(name);
  const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
  if (idx < 1 || idx > n) throw BindError(name);
  return (head == first ? 0 : n) + static_cast<int>(idx) - 1;
}

bool is_constant(const Expr& e) {
  if (e.kind == ExprKind::variable) return false;
  for (const auto& c : e.children) {
    if (!is_constant(c)) return false;
  }
  return true;
}

class Lowering {
 public:
  Lowering(int n, VariableSpace space, Arity& arity) : n_(n), space_(space), arity_(arity) {}

  int emit(const Expr& e) {
    switch (e.kind) {
      case ExprKind::constant:
        return push({Op::constant, -1, -1, e.value});
      case ExprKind::variable: {
        const int s = slot_of(e.name, n_, space_);
        if (s == 2 * n_) {
          arity_.uses_t = true;
        } else if (s < n_) {
          arity_.uses_first = true;
        } else {
          arity_.uses_second = true;
        }
        return push({Op::variable, s});
      }
      case ExprKind::negate:
        return push({Op::negate, emit(e.children[0])});
      case ExprKind::binary: {
        if (e.op == '^' && is_constant(e.children[1])) {
          const double k = evaluate(e.children[1], {}, {});
          return push({Op::pow_const, emit(e.children[0]), -1, k});
        }
        const int a = emit(e.children[0]);
        const int b = emit(e.children[1]);
        switch (e.op) {
          case '+': return push({Op::add, a, b});
          case '-': return push({Op::sub, a, b});
          case '*': return push({Op::mul, a, b});
          case '/': return push({Op::div, a, b});
          default: return push({Op::pow, a, b});
        }
      }
      case ExprKind::call: {
        const int a = emit(e.children[0]);
        Op op = Op::sqrt;
        if (e.name == "sin") op = Op::sin;
        else if (e.name == "cos") op = Op::cos;
        else if (e.name == "exp") op = Op::exp;
        else if (e.name == "log") op = Op::log;
        return push({op, a});
      }
    }
    return -1;
  }

  std::vector<Instr> code;

 private:
  int push(Instr i) {
    code.push_back(i);
    return static_cast<int>(code.size()) - 1;
  }
  int n_;
  VariableSpace space_;
  Arity& arity_;
};

[[noreturn]] void domain_error(const char* what, double at) {
  throw EvaluationError(std::string(what) + " (argument " + std::to_string(at) + ")");
}

}  // namespace

std::vector<std::string> slot_names(int n, VariableSpace space) {
  const char first = space == VariableSpace::phase ? 'q' : 'a';
  const char second = space == VariableSpace::phase ? 'p' : 'b';
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back(first + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back(second + std::to_string(i));
  names.push_back("t");
  return names;
}

ScalarField compile(const Expr& ast, int n, VariableSpace space) {
  if (n < 1) throw DimensionError("field dimension must be >= 1");
  ScalarField f;
  Lowering lower(n, space, f.arity_);
  lower.emit(ast);
  auto prog = std::make_shared<detail::Program>();
  prog->code = std::move(lower.code);
  prog->slots = 2 * n + 1;
  f.program_ = std::move(prog);
  f.n_ = n;
  f.space_ = space;
  f.source_ = print(ast);
  return f;
}

ScalarField make_field(std::string_view source, int n, VariableSpace space) {
  ScalarField f = compile(parse(source), n, space);
  return f;
}

double ScalarField::run(double t, const Eigen::Ref<const Eigen::VectorXd>& x, int order,
                        double* grad_out, double* hess_out) const {
  if (!program_) throw StateError("evaluating an empty ScalarField");
  if (x.size() != 2 * n_) {
    throw DimensionError("field expects " + std::to_string(2 * n_) + " coordinates, got " +
                         std::to_string(x.size()));
  }
  const auto& code = program_->code;
  const int m = program_->slots;
  const int mm = m * m;
  Workspace& ws = tls_workspace;
  ws.reserve(code.size(), m);
  double* V = ws.val.data();
  double* G = ws.grad.data();
  double* H = ws.hess.data();

  for (std::size_t i = 0; i < code.size(); ++i) {
    const Instr& in = code[i];
    double* g = G + i * m;
    double* h = H + i * mm;
    const double* ga = in.a >= 0 ? G + in.a * m : nullptr;
    const double* ha = in.a >= 0 ? H + in.a * mm : nullptr;
    const double* gb = in.b >= 0 ? G + in.b * m : nullptr;
    const double* hb = in.b >= 0 ? H + in.b * mm : nullptr;
    const double va = in.a >= 0 ? V[in.a] : 0.0;
    const double vb = in.b >= 0 ? V[in.b] : 0.0;
    auto zero = [&] {
      if (order >= 1) std::fill(g, g + m, 0.0);
      if (order >= 2) std::fill(h, h + mm, 0.0);
    };
    auto unary = [&](double f0, double f1, double f2) {
      V[i] = f0;
      detail::chain_unary(f1, f2, ga, ha, g, h, m, order);
    };
    switch (in.op) {
      case Op::constant:
        V[i] = in.c;
        zero();
        break;
      case Op::variable:
        V[i] = in.a == 2 * n_ ? t : x[in.a];
        zero();
        if (order >= 1) g[in.a] = 1.0;
        break;
      case Op::negate:
        unary(-va, -1.0, 0.0);
        break;
      case Op::add:
        V[i] = va + vb;
        detail::add(1.0, ga, ha, gb, hb, g, h, m, order);
        break;
      case Op::sub:
        V[i] = va - vb;
        detail::add(-1.0, ga, ha, gb, hb, g, h, m, order);
        break;
      case Op::mul:
        V[i] = va * vb;
        detail::mul(va, ga, ha, vb, gb, hb, g, h, m, order);
        break;
      case Op::div: {
        if (vb == 0.0) domain_error("division by zero", vb);
        // u / w = u * (1/w) with the reciprocal held in scratch.
        const double r = 1.0 / vb;
        V[i] = va * r;
        if (order >= 1) {
          thread_local std::vector<double> rg, rh;
          if (rg.size() < static_cast<std::size_t>(m)) rg.resize(m);
          if (rh.size() < static_cast<std::size_t>(mm)) rh.resize(mm);
          detail::chain_unary(-r * r, 2.0 * r * r * r, gb, hb, rg.data(), rh.data(), m, order);
          detail::mul(va, ga, ha, r, rg.data(), rh.data(), g, h, m, order);
        }
        break;
      }
      case Op::pow_const: {
        const double k = in.c;
        const bool integral = std::floor(k) == k;
        if (va < 0.0 && !integral) domain_error("non-integer power of a negative number", va);
        if (va == 0.0 && k < 0.0) domain_error("negative power of zero", va);
        if (k == 0.0) {
          V[i] = 1.0;
          zero();
        } else if (k == 1.0) {
          unary(va, 1.0, 0.0);
        } else if (k == 2.0) {
          unary(va * va, 2.0 * va, 2.0);
        } else if (va == 0.0) {
          // k > 0 and k not in {1, 2} here.
          if ((k < 1.0 && order >= 1) || (k < 2.0 && order >= 2)) {
            domain_error("power is not differentiable at zero", va);
          }
          unary(0.0, 0.0, 0.0);
        } else {
          const double p2 = std::pow(va, k - 2.0);
          unary(std::pow(va, k), k * p2 * va, k * (k - 1.0) * p2);
        }
        break;
      }
      case Op::pow: {
        // u^w = exp(w log u) for variable exponents.
        if (va <= 0.0) domain_error("variable exponent requires a positive base", va);
        const double lu = std::log(va);
        const double val = std::pow(va, vb);
        V[i] = val;
        if (order >= 1) {
          thread_local std::vector<double> lg, lh, eg, eh;
          lg.resize(m);
          lh.resize(mm);
          eg.resize(m);
          eh.resize(mm);
          const double r = 1.0 / va;
          detail::chain_unary(r, -r * r, ga, ha, lg.data(), lh.data(), m, order);
          detail::mul(vb, gb, hb, lu, lg.data(), lh.data(), eg.data(), eh.data(), m, order);
          detail::chain_unary(val, val, eg.data(), eh.data(), g, h, m, order);
        }
        break;
      }
      case Op::sin: {
        const double s = std::sin(va), c = std::cos(va);
        unary(s, c, -s);
        break;
      }
      case Op::cos: {
        const double s = std::sin(va), c = std::cos(va);
        unary(c, -s, -c);
        break;
      }
      case Op::exp: {
        const double e = std::exp(va);
        unary(e, e, e);
        break;
      }
      case Op::log: {
        if (va <= 0.0) domain_error("log of a non-positive number", va);
        const double r = 1.0 / va;
        unary(std::log(va), r, -r * r);
        break;
      }
      case Op::sqrt: {
        if (va < 0.0 || (va == 0.0 && order >= 1)) domain_error("sqrt outside its smooth domain", va);
        const double s = std::sqrt(va);
        unary(s, 0.5 / s, -0.25 / (s * va));
        break;
      }
    }
  }

  const std::size_t last = code.size() - 1;
  const double result = V[last];
  if (!std::isfinite(result)) throw EvaluationError("non-finite value in '" + source_ + "'");
  if (order >= 1) {
    const double* g = G + last * m;
    for (int k = 0; k < m; ++k) {
      if (!std::isfinite(g[k])) throw EvaluationError("non-finite gradient in '" + source_ + "'");
      grad_out[k] = g[k];
    }
  }
  if (order >= 2) {
    const double* h = H + last * mm;
    // Symmetrize to kill rounding asymmetry from the product rule ordering.
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) hess_out[j * m + k] = 0.5 * (h[j * m + k] + h[k * m + j]);
    }
  }
  return result;
}

double ScalarField::value(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return run(t, x, 0, nullptr, nullptr);
}

double ScalarField::gradient(double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != slots()) throw DimensionError("gradient buffer has wrong size");
  return run(t, x, 1, grad.data(), nullptr);
}

double ScalarField::hessian(double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> grad,
                            Eigen::Ref<Eigen::MatrixXd> hess) const {
  if (grad.size() != slots() || hess.rows() != slots() || hess.cols() != slots()) {
    throw DimensionError("Hessian buffer has wrong size");
  }
  // Eigen::Ref to a MatrixXd may carry an outer stride; copy through a dense scratch.
  thread_local Eigen::MatrixXd scratch;
  scratch.resize(slots(), slots());
  const double v = run(t, x, 2, grad.data(), scratch.data());
  hess = scratch;
  return v;
}

Dual2 ScalarField::evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(slots());
  Eigen::MatrixXd h(slots(), slots());
  const double v = hessian(t, x, g, h);
  return {v, std::move(g), std::move(h)};
}

}  // namespace shj
