#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace shj {

namespace detail {

// Second-order forward-mode kernels over raw storage. Gradients have length m,
// Hessians are dense column-major m x m. `order` selects how much is propagated
// (0: value, 1: + gradient, 2: + Hessian); outputs beyond `order` are untouched.

/// out = phi(u) given phi'(u) = d1 and phi''(u) = d2.
inline void chain_unary(double d1, double d2, const double* ug, const double* uh, double* og,
                        double* oh, int m, int order) {
  if (order >= 1) {
    for (int i = 0; i < m; ++i) og[i] = d1 * ug[i];
  }
  if (order >= 2) {
    for (int j = 0; j < m; ++j) {
      const double gj = d2 * ug[j];
      for (int i = 0; i < m; ++i) oh[j * m + i] = d1 * uh[j * m + i] + gj * ug[i];
    }
  }
}

/// out = u + sign * w.
inline void add(double sign, const double* ug, const double* uh, const double* wg,
                const double* wh, double* og, double* oh, int m, int order) {
  if (order >= 1) {
    for (int i = 0; i < m; ++i) og[i] = ug[i] + sign * wg[i];
  }
  if (order >= 2) {
    for (int i = 0; i < m * m; ++i) oh[i] = uh[i] + sign * wh[i];
  }
}

/// out = u * w.
inline void mul(double uv, const double* ug, const double* uh, double wv, const double* wg,
                const double* wh, double* og, double* oh, int m, int order) {
  if (order >= 1) {
    for (int i = 0; i < m; ++i) og[i] = uv * wg[i] + wv * ug[i];
  }
  if (order >= 2) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        oh[j * m + i] = uv * wh[j * m + i] + wv * uh[j * m + i] + ug[i] * wg[j] + wg[i] * ug[j];
      }
    }
  }
}

}  // namespace detail

/// Value, gradient and Hessian of a scalar function of m variables, propagated in one pass.
class Dual2 {
 public:
  Dual2() = default;

  /// A constant in an m-variable space.
  Dual2(double value, int m) : value_(value), grad_(Eigen::VectorXd::Zero(m)),
                               hess_(Eigen::MatrixXd::Zero(m, m)) {}

  /// The i-th independent variable of an m-variable space.
  static Dual2 variable(double value, int index, int m) {
    Dual2 d(value, m);
    d.grad_(index) = 1.0;
    return d;
  }

  Dual2(double value, Eigen::VectorXd grad, Eigen::MatrixXd hess)
      : value_(value), grad_(std::move(grad)), hess_(std::move(hess)) {}

  double value() const { return value_; }
  const Eigen::VectorXd& gradient() const { return grad_; }
  const Eigen::MatrixXd& hessian() const { return hess_; }
  int size() const { return static_cast<int>(grad_.size()); }

  Dual2 operator-() const { return {-value_, -grad_, -hess_}; }

  friend Dual2 operator+(const Dual2& u, const Dual2& w) {
    return {u.value_ + w.value_, u.grad_ + w.grad_, u.hess_ + w.hess_};
  }
  friend Dual2 operator-(const Dual2& u, const Dual2& w) {
    return {u.value_ - w.value_, u.grad_ - w.grad_, u.hess_ - w.hess_};
  }
  friend Dual2 operator*(const Dual2& u, const Dual2& w) {
    Dual2 out(u.value_ * w.value_, u.size());
    detail::mul(u.value_, u.grad_.data(), u.hess_.data(), w.value_, w.grad_.data(),
                w.hess_.data(), out.grad_.data(), out.hess_.data(), u.size(), 2);
    return out;
  }
  friend Dual2 operator/(const Dual2& u, const Dual2& w) { return u * reciprocal(w); }

  friend Dual2 operator*(double c, const Dual2& u) { return {c * u.value_, c * u.grad_, c * u.hess_}; }
  friend Dual2 operator+(double c, const Dual2& u) { return {c + u.value_, u.grad_, u.hess_}; }

  /// Applies phi with phi(u), phi'(u), phi''(u) supplied by the caller.
  Dual2 apply(double f0, double f1, double f2) const {
    Dual2 out(f0, size());
    detail::chain_unary(f1, f2, grad_.data(), hess_.data(), out.grad_.data(), out.hess_.data(),
                        size(), 2);
    return out;
  }

  friend Dual2 reciprocal(const Dual2& u) {
    const double r = 1.0 / u.value_;
    return u.apply(r, -r * r, 2.0 * r * r * r);
  }
  friend Dual2 sin(const Dual2& u) {
    const double s = std::sin(u.value_), c = std::cos(u.value_);
    return u.apply(s, c, -s);
  }
  friend Dual2 cos(const Dual2& u) {
    const double s = std::sin(u.value_), c = std::cos(u.value_);
    return u.apply(c, -s, -c);
  }
  friend Dual2 exp(const Dual2& u) {
    const double e = std::exp(u.value_);
    return u.apply(e, e, e);
  }

 private:
  double value_ = 0.0;
  Eigen::VectorXd grad_;
  Eigen::MatrixXd hess_;
};

}  // namespace shj
