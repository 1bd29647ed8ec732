#include "msl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msl/errors.hpp"

namespace msl {

void Dims::validate() const {
  if (n < 2 || n > 4) throw InvalidArgument("n must satisfy 2 <= n <= 4, got " + std::to_string(n));
  if (m < 1 || m > 3) throw InvalidArgument("m must satisfy 1 <= m <= 3, got " + std::to_string(m));
  if (n + m > 7) throw InvalidArgument("n + m must not exceed 7");
}

Vec AmbientPoint::flat() const {
  Vec X(x);
  X.insert(X.end(), z.begin(), z.end());
  return X;
}

AmbientPoint AmbientPoint::split(std::span<const double> X, int n) {
  return AmbientPoint{Vec(X.begin(), X.begin() + n), Vec(X.begin() + n, X.end())};
}

namespace {

// G = I_m + A^T A
Matrix metric(const Gradient& A) { return Matrix::identity(A.cols()) + A.transpose() * A; }

}  // namespace

double area_integrand(const Gradient& A) { return std::sqrt(determinant(metric(A))); }

Gradient area_gradient(const Gradient& A) {
  const Matrix G = metric(A);
  const double F = std::sqrt(determinant(G));
  return F * (A * inverse(G));
}

Gradient area_gradient_derivative(const Gradient& A, const Gradient& E) {
  const Matrix G = metric(A);
  const Matrix Ginv = inverse(G);
  const double F = std::sqrt(determinant(G));
  const Matrix AGinv = A * Ginv;
  // dF = F tr(G^{-1} A^T E)
  const Matrix GAtE = Ginv * (A.transpose() * E);
  double tr = 0.0;
  for (int a = 0; a < GAtE.rows(); ++a) tr += GAtE(a, a);
  const Matrix dG = E.transpose() * A + A.transpose() * E;
  Matrix out = (F * tr) * AGinv;
  out += F * (E * Ginv);
  out -= F * (AGinv * dG * Ginv);
  return out;
}

AreaHessian area_hessian(const Gradient& A) {
  const int n = A.rows();
  const int m = A.cols();
  Matrix t(n * m, n * m);
  for (int j = 0; j < n; ++j) {
    for (int beta = 0; beta < m; ++beta) {
      Gradient E(n, m);
      E(j, beta) = 1.0;
      const Gradient d = area_gradient_derivative(A, E);
      for (int i = 0; i < n; ++i)
        for (int alpha = 0; alpha < m; ++alpha) t(i * m + alpha, j * m + beta) = d(i, alpha);
    }
  }
  return AreaHessian(n, m, SymMatrix(t));
}

namespace {

void check_ellipticity(double lambda, double Lambda) {
  if (!(lambda > 0.0) || lambda > Lambda)
    throw InvalidArgument("Pucci operator requires 0 < lambda <= Lambda");
}

}  // namespace

double pucci_plus(const SymMatrix& N, double lambda, double Lambda) {
  check_ellipticity(lambda, Lambda);
  double pos = 0.0, neg = 0.0;
  for (double e : eigenvalues(N)) (e > 0 ? pos : neg) += std::abs(e);
  return Lambda * pos - lambda * neg;
}

double pucci_minus(const SymMatrix& N, double lambda, double Lambda) {
  check_ellipticity(lambda, Lambda);
  double pos = 0.0, neg = 0.0;
  for (double e : eigenvalues(N)) (e > 0 ? pos : neg) += std::abs(e);
  return lambda * pos - Lambda * neg;
}

Matrix hyperplane_basis(std::span<const double> grad) {
  const int k = static_cast<int>(grad.size());
  const double g = norm(grad);
  if (g == 0.0) throw DegenerateGradient("hyperplane_basis: zero normal");
  // v = u + sign(u_0) e_0 with u = grad/|grad|; H = I - 2 v v^T / v^T v maps u to -sign(u_0) e_0.
  Vec v(k);
  for (int i = 0; i < k; ++i) v[i] = grad[i] / g;
  v[0] += (v[0] >= 0.0 ? 1.0 : -1.0);
  const double vv = dot(v, v);
  Matrix Q(k, k - 1);
  for (int i = 0; i < k; ++i)
    for (int c = 1; c < k; ++c) Q(i, c - 1) = (i == c ? 1.0 : 0.0) - 2.0 * v[i] * v[c] / vv;
  return Q;
}

double default_grad_tol(const SymMatrix& hess) { return 1e-8 * (1.0 + hess.frobenius()); }

double min_tangential_laplacian(const SymMatrix& hess, std::span<const double> grad, int n,
                                double grad_tol) {
  const int k = hess.size();
  if (static_cast<int>(grad.size()) != k) throw InvalidArgument("min_tangential_laplacian: size mismatch");
  if (n < 1 || n > k - 1) throw InvalidArgument("min_tangential_laplacian: need 1 <= n < dim");
  if (grad_tol < 0.0) grad_tol = default_grad_tol(hess);
  if (norm(grad) < grad_tol) throw DegenerateGradient("gradient below tolerance; level set undefined");
  const Matrix Q = hyperplane_basis(grad);
  const SymMatrix restricted(Q.transpose() * hess.matrix() * Q);
  const Vec ev = eigenvalues(restricted);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += ev[i];
  return s;
}

bool cone_contains(const Cone& c, const AmbientPoint& X) {
  // tan(pi/4) rounds below 1; keep the boundary inclusive at roundoff level.
  return norm(X.z) <= std::tan(c.gamma) * norm(X.x) * (1.0 + 1e-12);
}

}  // namespace msl
