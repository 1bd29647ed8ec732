#include "msl/maps.hpp"

#include <algorithm>
#include <cmath>

namespace msl {

void AffineMap::eval(std::span<const double> x, std::span<double> out) const {
  for (int a = 0; a < m(); ++a) {
    double s = b[a];
    for (int i = 0; i < n(); ++i) s += A(i, a) * x[i];
    out[a] = s;
  }
}

Vec AffineMap::operator()(std::span<const double> x) const {
  Vec out(m());
  eval(x, out);
  return out;
}

double AffineMap::slope_norm() const {
  const Vec ev = eigenvalues(SymMatrix(A.transpose() * A));
  return std::sqrt(std::max(0.0, ev.back()));
}

QuadraticMap QuadraticMap::zero(const Dims& d) {
  return {Vec(d.m, 0.0), Gradient(d.n, d.m), std::vector<SymMatrix>(d.m, SymMatrix(d.n))};
}

QuadraticMap QuadraticMap::from_affine(const AffineMap& l) {
  return {l.b, l.A, std::vector<SymMatrix>(l.m(), SymMatrix(l.n()))};
}

void QuadraticMap::eval(std::span<const double> x, std::span<double> out) const {
  for (int a = 0; a < m(); ++a) {
    double s = b[a];
    for (int i = 0; i < n(); ++i) {
      s += A(i, a) * x[i];
      for (int j = 0; j < n(); ++j) s += Q[a](i, j) * x[i] * x[j];
    }
    out[a] = s;
  }
}

Vec QuadraticMap::operator()(std::span<const double> x) const {
  Vec out(m());
  eval(x, out);
  return out;
}

Gradient QuadraticMap::jacobian(std::span<const double> x) const {
  Gradient J = A;
  for (int a = 0; a < m(); ++a)
    for (int i = 0; i < n(); ++i) {
      double s = 0.0;
      for (int j = 0; j < n(); ++j) s += Q[a](i, j) * x[j];
      J(i, a) += 2.0 * s;
    }
  return J;
}

bool QuadraticMap::is_harmonic(double tol) const {
  for (const auto& q : Q) {
    double tr = 0.0;
    for (int i = 0; i < q.size(); ++i) tr += q(i, i);
    if (std::abs(tr) > tol) return false;
  }
  return true;
}

double QuadraticMap::quadratic_bound() const {
  double s = 0.0;
  for (const auto& q : Q) s = std::max(s, q.matrix().max_abs());
  return s;
}

double QuadraticMap::coefficient_bound() const {
  double s = quadratic_bound();
  for (double v : b) s = std::max(s, std::abs(v));
  return std::max(s, A.max_abs());
}

}  // namespace msl
