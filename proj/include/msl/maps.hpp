#pragma once

// Affine and quadratic maps R^n -> R^m used as flatness approximants.

#include <span>
#include <vector>

#include "msl/geometry.hpp"

namespace msl {

// l(x) = b + A^T x, i.e. l^alpha(x) = b^alpha + sum_i A(i, alpha) x_i.
struct AffineMap {
  Vec b;       // m
  Gradient A;  // n x m

  static AffineMap zero(const Dims& d) { return {Vec(d.m, 0.0), Gradient(d.n, d.m)}; }
  int n() const { return A.rows(); }
  int m() const { return A.cols(); }
  void eval(std::span<const double> x, std::span<double> out) const;
  Vec operator()(std::span<const double> x) const;
  // Operator norm |A| (largest singular value).
  double slope_norm() const;
};

// q^alpha(x) = b^alpha + sum_i A(i, alpha) x_i + x^T Q[alpha] x.
struct QuadraticMap {
  Vec b;
  Gradient A;
  std::vector<SymMatrix> Q;  // one n x n form per component

  static QuadraticMap zero(const Dims& d);
  static QuadraticMap from_affine(const AffineMap& l);
  int n() const { return A.rows(); }
  int m() const { return A.cols(); }

  void eval(std::span<const double> x, std::span<double> out) const;
  Vec operator()(std::span<const double> x) const;
  // Dq(x), n x m.
  Gradient jacobian(std::span<const double> x) const;
  // True when every trace(Q[alpha]) vanishes to tol.
  bool is_harmonic(double tol = 1e-12) const;
  // Largest absolute value among all coefficients (b, A, Q entries).
  double coefficient_bound() const;
  double quadratic_bound() const;
  AffineMap affine_part() const { return {b, A}; }
};

}  // namespace msl
