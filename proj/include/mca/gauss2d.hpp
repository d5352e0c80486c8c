#pragma once

// Bivariate Gaussian primitives: validated SPD 2x2 covariances, density
// evaluation, and the closed-form Gaussian-Gaussian product integral with
// its analytic derivatives. Everything here is a pure function over
// immutable values; the 2x2 case is handled fully in closed form.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mca/errors.hpp"

namespace mca {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double log_two_pi = 1.8378770664093454836;

struct Vec2 {
  double u = 0.0;
  double v = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.u + b.u, a.v + b.v}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.u - b.u, a.v - b.v}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.u, s * a.v}; }
inline double dot(Vec2 a, Vec2 b) { return a.u * b.u + a.v * b.v; }

inline bool finite(Vec2 a) { return std::isfinite(a.u) && std::isfinite(a.v); }

// Plain symmetric 2x2 [[a, b], [b, c]]; no definiteness requirement.
// Used for derivative values.
struct Sym2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// Symmetric positive definite 2x2 [[a, b], [b, c]], validated once at
// construction; operations assume validity. The determinant check uses a
// relative tolerance so that near-singular matrices are rejected.
class Spd2 {
 public:
  Spd2(double a, double b, double c) : a_(a), b_(b), c_(c) {
    const double det = a * c - b * b;
    if (!(a > 0.0) || !(c > 0.0) || !(det > 1e-12 * a * c)) {
      throw std::invalid_argument("Spd2: matrix is not positive definite");
    }
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

  double det() const { return a_ * c_ - b_ * b_; }

  Spd2 inverse() const {
    const double d = det();
    return Spd2(c_ / d, -b_ / d, a_ / d);
  }

  // x = S^{-1} y via the closed-form inverse.
  Vec2 solve(Vec2 y) const {
    const double d = det();
    return {(c_ * y.u - b_ * y.v) / d, (a_ * y.v - b_ * y.u) / d};
  }

  // y' S^{-1} y.
  double quad_inv(Vec2 y) const {
    const double d = det();
    return (c_ * y.u * y.u - 2.0 * b_ * y.u * y.v + a_ * y.v * y.v) / d;
  }

  double min_eigenvalue() const {
    const double half_trace = 0.5 * (a_ + c_);
    const double r = std::sqrt(0.25 * (a_ - c_) * (a_ - c_) + b_ * b_);
    return half_trace - r;
  }

  friend Spd2 operator+(const Spd2& x, const Spd2& y) {
    return Spd2(x.a_ + y.a_, x.b_ + y.b_, x.c_ + y.c_);
  }

 private:
  double a_, b_, c_;
};

struct Gaussian2 {
  Vec2 mean;
  Spd2 cov;
};

// Canonical evaluation path: stays finite for Mahalanobis distances far
// beyond the representable range of the density itself.
inline double log_pdf(const Gaussian2& g, Vec2 x) {
  const Vec2 d = x - g.mean;
  return -log_two_pi - 0.5 * std::log(g.cov.det()) - 0.5 * g.cov.quad_inv(d);
}

inline double pdf(const Gaussian2& g, Vec2 x) { return std::exp(log_pdf(g, x)); }

// Integral of the product of two Gaussian densities over the whole plane:
//   int N(x; m1, S1) N(x; m2, S2) dx = N(m1; m2, S1 + S2).
inline double product_integral(const Gaussian2& g1, const Gaussian2& g2) {
  return pdf(Gaussian2{g2.mean, g1.cov + g2.cov}, g1.mean);
}

struct ProductIntegralGrad {
  double value = 0.0;  // r = N(m1; m2, S1 + S2)
  Vec2 dmean;          // dr/dm1
  Sym2 dcov;           // dr/dS1, full symmetric 2x2
};

// Analytic derivatives of the product integral with respect to the first
// Gaussian's parameters. With S = S1 + S2, q = S^{-1}(m2 - m1):
//   dr/dm1 = r q,   dr/dS1 = r/2 (q q' - S^{-1}).
// The dcov result is the plain matrix derivative; mapping it onto the
// (a, b, c) encoding (factor 2 on the off-diagonal) is the caller's concern.
inline ProductIntegralGrad product_integral_grad(const Gaussian2& g1,
                                                 const Gaussian2& g2) {
  const Spd2 s = g1.cov + g2.cov;
  const Vec2 delta = g2.mean - g1.mean;
  const Vec2 q = s.solve(delta);
  const Spd2 sinv = s.inverse();
  const double r = pdf(Gaussian2{g2.mean, s}, g1.mean);
  ProductIntegralGrad out;
  out.value = r;
  out.dmean = r * q;
  out.dcov.a = 0.5 * r * (q.u * q.u - sinv.a());
  out.dcov.b = 0.5 * r * (q.u * q.v - sinv.b());
  out.dcov.c = 0.5 * r * (q.v * q.v - sinv.c());
  return out;
}

}  // namespace mca
