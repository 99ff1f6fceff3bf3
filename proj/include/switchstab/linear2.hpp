#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace switchstab {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;

/// Invertibility test used throughout: |det A| > 1e-12 * ||A||_F^2.
template <typename Derived>
bool is_invertible(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return std::abs(a.determinant()) > Scalar(1e-12) * a.squaredNorm();
}

/// Closed-form exponential of a 2x2 matrix times t.
///
/// With s = tr(A)/2 and M = A - sI, Cayley-Hamilton gives M^2 = delta*I where
/// delta = -det(M), so exp(At) = exp(st) * (c(t) I + g(t) M) with c, g the
/// hyperbolic, trigonometric or polynomial pair selected by the sign of delta.
template <typename Scalar>
Mat2<Scalar> expm2(const Mat2<Scalar>& a, Scalar t) {
  using std::abs, std::cos, std::cosh, std::exp, std::sin, std::sinh, std::sqrt;
  const Scalar s = a.trace() / Scalar(2);
  const Mat2<Scalar> m = a - s * Mat2<Scalar>::Identity();
  const Scalar delta = -m.determinant();
  const Scalar z = delta * t * t;
  Scalar c;
  Scalar g;
  if (abs(z) < Scalar(1e-8)) {
    c = Scalar(1) + z / Scalar(2) + z * z / Scalar(24);
    g = t * (Scalar(1) + z / Scalar(6) + z * z / Scalar(120));
  } else if (delta > 0) {
    const Scalar w = sqrt(delta);
    c = cosh(w * t);
    g = sinh(w * t) / w;
  } else {
    const Scalar w = sqrt(-delta);
    c = cos(w * t);
    g = sin(w * t) / w;
  }
  return exp(s * t) * (c * Mat2<Scalar>::Identity() + g * m);
}

/// Exact solution of x' = A x + b after time t. Requires A invertible.
template <typename Scalar>
Vec2<Scalar> affine_flow_exact(const Mat2<Scalar>& a, const Vec2<Scalar>& b,
                               const Vec2<Scalar>& x0, Scalar t) {
  const Vec2<Scalar> x_eq = -a.inverse() * b;
  return x_eq + expm2(a, t) * (x0 - x_eq);
}

/// One classical 4th-order Runge-Kutta step of x' = f(x).
template <typename Scalar, typename Field>
Vec2<Scalar> rk4_step(const Field& f, const Vec2<Scalar>& x, Scalar h) {
  const Vec2<Scalar> k1 = f(x);
  const Vec2<Scalar> k2 = f(Vec2<Scalar>(x + h / Scalar(2) * k1));
  const Vec2<Scalar> k3 = f(Vec2<Scalar>(x + h / Scalar(2) * k2));
  const Vec2<Scalar> k4 = f(Vec2<Scalar>(x + h * k3));
  return x + h / Scalar(6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

}  // namespace switchstab
