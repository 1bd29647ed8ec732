#pragma once

// Differential geometry of the minimal surface system for graphs
// u : R^n -> R^m. Slopes are stored as an n x m matrix A with
// A(i, alpha) = d_i u^alpha.

#include <span>

#include "msl/linalg.hpp"

namespace msl {

struct Dims {
  int n = 2;
  int m = 1;

  int ambient() const { return n + m; }
  // Throws InvalidArgument unless 2 <= n <= 4, 1 <= m <= 3, n + m <= 7.
  void validate() const;
  friend bool operator==(const Dims&, const Dims&) = default;
};

using Gradient = Matrix;

struct AmbientPoint {
  Vec x;
  Vec z;

  Vec flat() const;
  static AmbientPoint split(std::span<const double> X, int n);
};

// (det(I_m + A^T A))^{1/2}.
double area_integrand(const Gradient& A);

// DF(A) = F(A) A (I_m + A^T A)^{-1}, an n x m matrix.
Gradient area_gradient(const Gradient& A);

// Directional derivative of DF at A along E:
//   [dDF(A)[E]]_{i alpha} = sum_{j beta} F_{alpha i, beta j}(A) E_{j beta}.
Gradient area_gradient_derivative(const Gradient& A, const Gradient& E);

// Fourth-order coefficient tensor F_{alpha i, beta j}(A), stored as an
// (nm) x (nm) symmetric matrix indexed by k = i * m + alpha.
class AreaHessian {
 public:
  AreaHessian(int n, int m, SymMatrix t) : n_(n), m_(m), t_(std::move(t)) {}

  double operator()(int alpha, int i, int beta, int j) const {
    return t_(i * m_ + alpha, j * m_ + beta);
  }
  int n() const { return n_; }
  int m() const { return m_; }
  const SymMatrix& flat() const { return t_; }

 private:
  int n_;
  int m_;
  SymMatrix t_;
};

AreaHessian area_hessian(const Gradient& A);

// M+_{lambda,Lambda}(N) = Lambda |N+| - lambda |N-|. Requires 0 < lambda <= Lambda.
double pucci_plus(const SymMatrix& N, double lambda, double Lambda);
// M-_{lambda,Lambda}(N) = lambda |N+| - Lambda |N-|.
double pucci_minus(const SymMatrix& N, double lambda, double Lambda);

// Orthonormal basis of grad^perp as the columns of a k x (k-1) matrix, from
// the Householder reflection mapping grad/|grad| to e_1.
Matrix hyperplane_basis(std::span<const double> grad);

double default_grad_tol(const SymMatrix& hess);

// Minimum over n-dimensional subspaces L perpendicular to grad of the trace
// of hess restricted to L, i.e. the sum of the n smallest eigenvalues of the
// restriction to grad^perp. Throws DegenerateGradient when |grad| < grad_tol
// (grad_tol < 0 selects default_grad_tol).
double min_tangential_laplacian(const SymMatrix& hess, std::span<const double> grad, int n,
                                double grad_tol = -1.0);

struct Cone {
  double gamma = 0.0;  // half-angle in [0, pi/2)
};

// |z| <= tan(gamma) |x|, boundary inclusive.
bool cone_contains(const Cone& c, const AmbientPoint& X);

}  // namespace msl
