#pragma once

#include "shj/dual2.hpp"
#include "shj/expression.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace shj {

/// Which variable names a field may reference. Both spaces have 2n + 1 slots,
/// ordered (first block, second block, t):
///   phase:      q1..qn, p1..pn, t
///   generating: a1..an, b1..bn, t   (a = q1 slot, b = q2 slot of a generating function)
enum class VariableSpace { phase, generating };

struct Arity {
  bool uses_t = false;
  bool uses_first = false;   // q or a
  bool uses_second = false;  // p or b
};

namespace detail {
struct Program;
}

/// An immutable, thread-shareable twice-differentiable function of (x, t), x of length 2n.
///
/// Gradients and Hessians are over all 2n + 1 slots with t last. Evaluation throws
/// EvaluationError on domain errors (log/sqrt of non-positive values, division by zero,
/// non-integer powers of negative numbers) and on non-finite results.
class ScalarField {
 public:
  ScalarField() = default;

  int dimension() const { return n_; }
  int slots() const { return 2 * n_ + 1; }
  VariableSpace space() const { return space_; }
  const Arity& arity() const { return arity_; }
  const std::string& source() const { return source_; }
  bool empty() const { return !program_; }

  double value(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Writes the gradient (length 2n + 1) and returns the value.
  double gradient(double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                  Eigen::Ref<Eigen::VectorXd> grad) const;

  /// Writes gradient and Hessian ((2n + 1) x (2n + 1)) and returns the value.
  double hessian(double t, const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> grad, Eigen::Ref<Eigen::MatrixXd> hess) const;

  Dual2 evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  friend ScalarField compile(const Expr& ast, int n, VariableSpace space);
  double run(double t, const Eigen::Ref<const Eigen::VectorXd>& x, int order, double* grad,
             double* hess) const;

  std::shared_ptr<const detail::Program> program_;
  int n_ = 0;
  VariableSpace space_ = VariableSpace::phase;
  Arity arity_;
  std::string source_;
};

/// Lowers an expression tree to a field. Throws BindError for names outside the space.
ScalarField compile(const Expr& ast, int n, VariableSpace space = VariableSpace::phase);

/// tokenize + parse + compile.
ScalarField make_field(std::string_view source, int n, VariableSpace space = VariableSpace::phase);

/// Names of the 2n + 1 slots of a space, in slot order.
std::vector<std::string> slot_names(int n, VariableSpace space);

}  // namespace shj
