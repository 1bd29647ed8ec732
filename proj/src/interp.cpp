#include "msl/interp.hpp"

#include <algorithm>
#include <cmath>

#include "msl/errors.hpp"

namespace msl {

namespace {

// Lagrange basis on nodes -1, 0, 1, 2 at t, with derivatives in t.
void lagrange(double t, double* w, double* dw, double* d2w) {
  w[0] = -(t * t * t - 3 * t * t + 2 * t) / 6;
  w[1] = (t * t * t - 2 * t * t - t + 2) / 2;
  w[2] = -(t * t * t - t * t - 2 * t) / 2;
  w[3] = (t * t * t - t) / 6;
  dw[0] = -(3 * t * t - 6 * t + 2) / 6;
  dw[1] = (3 * t * t - 4 * t - 1) / 2;
  dw[2] = -(3 * t * t - 2 * t - 2) / 2;
  dw[3] = (3 * t * t - 1) / 6;
  d2w[0] = 1 - t;
  d2w[1] = 3 * t - 2;
  d2w[2] = 1 - 3 * t;
  d2w[3] = t;
}

}  // namespace

GridInterpolant::GridInterpolant(GridMap u) : u_(std::move(u)) {
  const int n = u_.dims().n, m = u_.dims().m;
  const double h = u_.h();
  double d4 = 0.0;
  for (std::size_t idx : u_.unit_region().members) {
    for (int i = 0; i < n; ++i) {
      const int k = u_.axis_index(idx, i);
      if (k < 2 || k > u_.N() - 3) continue;
      const std::ptrdiff_t s = u_.stride(i);
      const std::size_t nb[5] = {idx - 2 * s, idx - s, idx, idx + s, idx + 2 * s};
      bool ok = true;
      for (std::size_t p : nb) ok = ok && u_.in_mask(p);
      if (!ok) continue;
      for (int a = 0; a < m; ++a) {
        const double v = u_.value(nb[0], a) - 4 * u_.value(nb[1], a) + 6 * u_.value(nb[2], a) -
                         4 * u_.value(nb[3], a) + u_.value(nb[4], a);
        d4 = std::max(d4, std::abs(v));
      }
    }
  }
  hessian_error_ = 2.0 * d4 / (h * h);
}

GridInterpolant::Stencil GridInterpolant::stencil(std::span<const double> x) const {
  const int n = u_.dims().n, N = u_.N();
  const double h = u_.h();
  Stencil s;
  for (int i = 0; i < n; ++i) {
    const double p = (x[i] + 1.0) / h;
    const int k = std::clamp(static_cast<int>(std::floor(p)), 1, N - 3);
    lagrange(p - k, s.w[i], s.dw[i], s.d2w[i]);
    for (int c = 0; c < 4; ++c) {
      s.dw[i][c] /= h;
      s.d2w[i][c] /= h * h;
    }
    s.base += static_cast<std::size_t>(k - 1) * u_.stride(i);
  }
  return s;
}

// Calls f(node, offsets) for every node of the 4^n stencil.
template <class F>
void GridInterpolant::visit(const Stencil& s, F&& f) const {
  const int n = u_.dims().n;
  int off[4] = {0, 0, 0, 0};
  const int total = 1 << (2 * n);
  for (int c = 0; c < total; ++c) {
    std::size_t idx = s.base;
    for (int i = 0; i < n; ++i) {
      off[i] = (c >> (2 * i)) & 3;
      idx += off[i] * u_.stride(i);
    }
    if (!u_.in_mask(idx)) throw BoundaryProximity("interpolation stencil leaves the mask");
    f(idx, off);
  }
}

void GridInterpolant::eval(std::span<const double> x, std::span<double> out) const {
  const int n = u_.dims().n, m = u_.dims().m;
  const Stencil s = stencil(x);
  std::fill(out.begin(), out.begin() + m, 0.0);
  visit(s, [&](std::size_t idx, const int* off) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) w *= s.w[i][off[i]];
    for (int a = 0; a < m; ++a) out[a] += w * u_.value(idx, a);
  });
}

Gradient GridInterpolant::jacobian(std::span<const double> x) const {
  const int n = u_.dims().n, m = u_.dims().m;
  const Stencil s = stencil(x);
  Gradient J(n, m);
  visit(s, [&](std::size_t idx, const int* off) {
    for (int i = 0; i < n; ++i) {
      double w = 1.0;
      for (int j = 0; j < n; ++j) w *= (j == i ? s.dw[j][off[j]] : s.w[j][off[j]]);
      for (int a = 0; a < m; ++a) J(i, a) += w * u_.value(idx, a);
    }
  });
  return J;
}

std::vector<SymMatrix> GridInterpolant::hessians(std::span<const double> x) const {
  const int n = u_.dims().n, m = u_.dims().m;
  const Stencil s = stencil(x);
  std::vector<Matrix> H(m, Matrix(n, n));
  visit(s, [&](std::size_t idx, const int* off) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double w = 1.0;
        for (int k = 0; k < n; ++k) {
          if (k == i && k == j)
            w *= s.d2w[k][off[k]];
          else if (k == i || k == j)
            w *= s.dw[k][off[k]];
          else
            w *= s.w[k][off[k]];
        }
        for (int a = 0; a < m; ++a) H[a](i, j) += w * u_.value(idx, a);
      }
  });
  std::vector<SymMatrix> out;
  out.reserve(m);
  for (auto& M : H) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) M(i, j) = M(j, i);
    out.emplace_back(M);
  }
  return out;
}

}  // namespace msl
