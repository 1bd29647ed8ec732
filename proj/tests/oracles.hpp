#pragma once

// Independent reference computations used only by the test suites. None of
// these share code paths with the routines they check beyond basic
// matrix/vector arithmetic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "msl/geometry.hpp"
#include "msl/rng.hpp"

namespace msl::oracle {

inline Gradient random_gradient(CounterRng& rng, int n, int m, double lo, double hi) {
  Gradient A(n, m);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) A(i, a) = rng.uniform(lo, hi);
  return A;
}

inline SymMatrix random_sym(CounterRng& rng, int k, double scale = 1.0) {
  SymMatrix s(k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) s.set(i, j, scale * rng.uniform(-1, 1));
  return s;
}

// Central differences of the area integrand, step h.
inline Gradient fd_area_gradient(const Gradient& A, double h) {
  Gradient g(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int a = 0; a < A.cols(); ++a) {
      Gradient p = A, q = A;
      p(i, a) += h;
      q(i, a) -= h;
      g(i, a) = (area_integrand(p) - area_integrand(q)) / (2 * h);
    }
  return g;
}

// Richardson-extrapolated central differences of area_gradient:
// (4 D(h/2) - D(h)) / 3 with D the central difference.
inline Matrix richardson_area_hessian(const Gradient& A) {
  const int n = A.rows(), m = A.cols();
  const double step = 1e-3 * std::max(1.0, A.frobenius());
  Matrix t(n * m, n * m);
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < m; ++b) {
      auto central = [&](double h) {
        Gradient p = A, q = A;
        p(j, b) += h;
        q(j, b) -= h;
        return (area_gradient(p) - area_gradient(q)) * (1.0 / (2 * h));
      };
      const Gradient d = (4.0 * central(step / 2) - central(step)) * (1.0 / 3.0);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) t(i * m + a, j * m + b) = d(i, a);
    }
  return t;
}

// Closed form for m = 1: D^2 sqrt(1 + |p|^2) = ((1+|p|^2) I - p p^T) / (1+|p|^2)^{3/2}.
inline Matrix scalar_area_hessian(const Vec& p) {
  const int n = static_cast<int>(p.size());
  const double w = 1.0 + dot(p, p);
  Matrix t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = ((i == j ? w : 0.0) - p[i] * p[j]) / std::pow(w, 1.5);
  return t;
}

// sup over diagonal-in-eigenbasis a with entries in {lambda, Lambda} of tr(a N).
inline double brute_force_pucci_plus(const SymMatrix& N, double lambda, double Lambda) {
  const Vec ev = eigenvalues(N);
  const int k = static_cast<int>(ev.size());
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << k); ++mask) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += ((mask >> i) & 1 ? Lambda : lambda) * ev[i];
    best = std::max(best, s);
  }
  return best;
}

// Gram-Schmidt orthonormalisation of the columns of V against an initial
// unit vector g (which is projected out first).
inline bool orthonormalize(Matrix& V, const Vec& g) {
  const int k = V.rows(), n = V.cols();
  for (int c = 0; c < n; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      double pg = 0.0;
      for (int r = 0; r < k; ++r) pg += V(r, c) * g[r];
      for (int r = 0; r < k; ++r) V(r, c) -= pg * g[r];
      for (int p = 0; p < c; ++p) {
        double s = 0.0;
        for (int r = 0; r < k; ++r) s += V(r, c) * V(r, p);
        for (int r = 0; r < k; ++r) V(r, c) -= s * V(r, p);
      }
    }
    double nn = 0.0;
    for (int r = 0; r < k; ++r) nn += V(r, c) * V(r, c);
    nn = std::sqrt(nn);
    if (nn < 1e-10) return false;
    for (int r = 0; r < k; ++r) V(r, c) /= nn;
  }
  return true;
}

inline double frame_trace(const SymMatrix& H, const Matrix& V) {
  const Matrix T = V.transpose() * H.matrix() * V;
  double s = 0.0;
  for (int i = 0; i < T.rows(); ++i) s += T(i, i);
  return s;
}

inline Matrix random_frame(CounterRng& rng, const Vec& g_unit, int n) {
  const int k = static_cast<int>(g_unit.size());
  Matrix V(k, n);
  do {
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < n; ++c) V(r, c) = rng.normal();
  } while (!orthonormalize(V, g_unit));
  return V;
}

struct FrameSearch {
  double sampled_min = std::numeric_limits<double>::infinity();
  double polished_min = std::numeric_limits<double>::infinity();
};

// Minimum of tr(V^T H V) over random orthonormal n-frames V perpendicular to
// grad, then polished by projected gradient descent on the Stiefel manifold
// from the best sample (trace minimisation has no spurious local minima).
inline FrameSearch frame_search(const SymMatrix& H, const Vec& grad, int n, int samples, CounterRng& rng) {
  Vec g = grad;
  const double gn = norm(g);
  for (double& v : g) v /= gn;
  FrameSearch out;
  Matrix best;
  for (int s = 0; s < samples; ++s) {
    const Matrix V = random_frame(rng, g, n);
    const double t = frame_trace(H, V);
    if (t < out.sampled_min) {
      out.sampled_min = t;
      best = V;
    }
  }
  const double step = 0.25 / (1.0 + H.frobenius());
  Matrix V = best;
  double t = out.sampled_min;
  for (int it = 0; it < 20000; ++it) {
    Matrix W = V - step * (H.matrix() * V);
    orthonormalize(W, g);
    const double tw = frame_trace(H, W);
    V = W;
    if (std::abs(t - tw) < 1e-15 * (1.0 + std::abs(t))) {
      t = tw;
      break;
    }
    t = tw;
  }
  out.polished_min = std::min(t, out.sampled_min);
  return out;
}

// Central differences of a scalar function of X.
template <class F>
Vec fd_gradient(const F& f, const Vec& X, double s) {
  Vec g(X.size()), Y = X;
  for (std::size_t i = 0; i < X.size(); ++i) {
    Y[i] = X[i] + s;
    const double p = f(Y);
    Y[i] = X[i] - s;
    const double q = f(Y);
    Y[i] = X[i];
    g[i] = (p - q) / (2 * s);
  }
  return g;
}

// Second differences of values, Richardson-combined over steps s and s/2.
template <class F>
Matrix fd_hessian(const F& f, const Vec& X, double s) {
  const int k = static_cast<int>(X.size());
  auto second = [&](double t) {
    Matrix H(k, k);
    Vec Y = X;
    auto at = [&](int i, double a, int j, double b) {
      Y[i] += a;
      Y[j] += b;
      const double v = f(Y);
      Y = X;
      return v;
    };
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j)
        H(i, j) = H(j, i) = (at(i, t, j, t) - at(i, t, j, -t) - at(i, -t, j, t) + at(i, -t, j, -t)) / (4 * t * t);
    return H;
  };
  return (4.0 * second(s / 2) - second(s)) * (1.0 / 3.0);
}

// Haar-ish random rotation of R^k from QR of a Gaussian matrix.
inline Matrix random_rotation(CounterRng& rng, int k) {
  Matrix V(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) V(r, c) = rng.normal();
  for (int c = 0; c < k; ++c) {
    for (int p = 0; p < c; ++p) {
      double s = 0.0;
      for (int r = 0; r < k; ++r) s += V(r, c) * V(r, p);
      for (int r = 0; r < k; ++r) V(r, c) -= s * V(r, p);
    }
    double nn = 0.0;
    for (int r = 0; r < k; ++r) nn += V(r, c) * V(r, c);
    nn = std::sqrt(nn);
    for (int r = 0; r < k; ++r) V(r, c) /= nn;
  }
  return V;
}

}  // namespace msl::oracle
