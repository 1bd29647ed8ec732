#include "msl/residual.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "msl/errors.hpp"

namespace msl {

namespace {

constexpr int kMaxN = 4;
constexpr int kMaxM = 3;

// Fixed-size slope n x m; the residual loops run millions of times per solve.
struct Slope {
  int n = 0;
  int m = 0;
  double a[kMaxN][kMaxM] = {};
};

struct Metric {
  double F = 1.0;
  double ginv[kMaxM][kMaxM] = {};
  double p[kMaxN][kMaxM] = {};  // A G^{-1}
};

Metric metric_of(const Slope& A) {
  const int n = A.n, m = A.m;
  double g[kMaxM][kMaxM] = {};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = (a == b) ? 1.0 : 0.0;
      for (int i = 0; i < n; ++i) s += A.a[i][a] * A.a[i][b];
      g[a][b] = s;
    }
  Metric M;
  double det = 0.0;
  if (m == 1) {
    det = g[0][0];
    M.ginv[0][0] = 1.0 / det;
  } else if (m == 2) {
    det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    M.ginv[0][0] = g[1][1] / det;
    M.ginv[1][1] = g[0][0] / det;
    M.ginv[0][1] = M.ginv[1][0] = -g[0][1] / det;
  } else {
    const double c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
    const double c01 = g[1][2] * g[2][0] - g[1][0] * g[2][2];
    const double c02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
    det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02;
    M.ginv[0][0] = c00 / det;
    M.ginv[0][1] = M.ginv[1][0] = c01 / det;
    M.ginv[0][2] = M.ginv[2][0] = c02 / det;
    M.ginv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det;
    M.ginv[1][2] = M.ginv[2][1] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) / det;
    M.ginv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det;
  }
  M.F = std::sqrt(det);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int b = 0; b < m; ++b) s += A.a[i][b] * M.ginv[b][a];
      M.p[i][a] = s;
    }
  return M;
}

Slope central_slope(const GridMap& u, std::size_t idx) {
  const int n = u.dims().n, m = u.dims().m;
  const double inv2h = 0.5 / u.h();
  Slope A{n, m, {}};
  for (int i = 0; i < n; ++i) {
    const std::ptrdiff_t s = u.stride(i);
    for (int a = 0; a < m; ++a) A.a[i][a] = (u.value(idx + s, a) - u.value(idx - s, a)) * inv2h;
  }
  return A;
}

void require_interior(const GridMap& u, std::size_t idx) {
  if (idx >= u.size() || u.kind(idx) != NodeKind::Interior)
    throw BoundaryProximity("residual stencil leaves the lattice mask");
}

Gradient to_matrix(const Slope& A) {
  Gradient g(A.n, A.m);
  for (int i = 0; i < A.n; ++i)
    for (int a = 0; a < A.m; ++a) g(i, a) = A.a[i][a];
  return g;
}

}  // namespace

Gradient central_gradient(const GridMap& u, std::size_t idx) {
  for (int i = 0; i < u.dims().n; ++i) {
    const std::ptrdiff_t s = u.stride(i);
    const auto up = static_cast<std::ptrdiff_t>(idx) + s;
    const auto dn = static_cast<std::ptrdiff_t>(idx) - s;
    if (dn < 0 || up >= static_cast<std::ptrdiff_t>(u.size()) || !u.in_mask(up) || !u.in_mask(dn) ||
        u.axis_index(idx, i) == 0 || u.axis_index(idx, i) == u.N() - 1)
      throw BoundaryProximity("central gradient stencil leaves the lattice mask");
  }
  return to_matrix(central_slope(u, idx));
}

namespace {

template <int M>
double invert_metric(const double g[M][M], double ginv[M][M]) {
  if constexpr (M == 1) {
    ginv[0][0] = 1.0 / g[0][0];
    return g[0][0];
  } else if constexpr (M == 2) {
    const double det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    ginv[0][0] = g[1][1] / det;
    ginv[1][1] = g[0][0] / det;
    ginv[0][1] = ginv[1][0] = -g[0][1] / det;
    return det;
  } else {
    const double c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
    const double c01 = g[1][2] * g[2][0] - g[1][0] * g[2][2];
    const double c02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
    const double det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02;
    ginv[0][0] = c00 / det;
    ginv[0][1] = ginv[1][0] = c01 / det;
    ginv[0][2] = ginv[2][0] = c02 / det;
    ginv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det;
    ginv[1][2] = ginv[2][1] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) / det;
    ginv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det;
    return det;
  }
}

// Same algebra as metric_of / directional_row with compile-time sizes.
template <int N, int M>
void nondivergence_fixed(const GridMap& u, std::size_t idx, double* out) {
  const double* v = u.raw().data();
  const double h = u.h();
  const double inv2h = 0.5 / h, inv_h2 = 1.0 / (h * h), inv_4h2 = 0.25 * inv_h2;
  std::ptrdiff_t s[N];
  for (int i = 0; i < N; ++i) s[i] = u.stride(i) * M;
  const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(idx) * M;

  double A[N][M], D2[M][N][N];
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < M; ++a) {
      A[i][a] = (v[c + s[i] + a] - v[c - s[i] + a]) * inv2h;
      D2[a][i][i] = (v[c + s[i] + a] - 2.0 * v[c + a] + v[c - s[i] + a]) * inv_h2;
    }
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (int a = 0; a < M; ++a)
        D2[a][i][j] = D2[a][j][i] = (v[c + s[i] + s[j] + a] - v[c + s[i] - s[j] + a] - v[c - s[i] + s[j] + a] +
                                     v[c - s[i] - s[j] + a]) *
                                    inv_4h2;

  double g[M][M], ginv[M][M];
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b) {
      double t = (a == b) ? 1.0 : 0.0;
      for (int i = 0; i < N; ++i) t += A[i][a] * A[i][b];
      g[a][b] = t;
    }
  const double F = std::sqrt(invert_metric<M>(g, ginv));
  double p[N][M];
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < M; ++a) {
      double t = 0.0;
      for (int b = 0; b < M; ++b) t += A[i][b] * ginv[b][a];
      p[i][a] = t;
    }

  double acc[M] = {};
  for (int i = 0; i < N; ++i) {
    // E[j][b] = D2[b][i][j]
    double t = 0.0;
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < M; ++a) t += p[j][a] * D2[a][i][j];
    double dG[M][M];
    for (int b = 0; b < M; ++b)
      for (int e = 0; e < M; ++e) {
        double w = 0.0;
        for (int j = 0; j < N; ++j) w += D2[b][i][j] * A[j][e] + A[j][b] * D2[e][i][j];
        dG[b][e] = w;
      }
    double pdG[M];
    for (int e = 0; e < M; ++e) {
      double w = 0.0;
      for (int b = 0; b < M; ++b) w += p[i][b] * dG[b][e];
      pdG[e] = w;
    }
    for (int a = 0; a < M; ++a) {
      double e_ginv = 0.0, pdg_ginv = 0.0;
      for (int b = 0; b < M; ++b) {
        e_ginv += D2[b][i][i] * ginv[b][a];
        pdg_ginv += pdG[b] * ginv[b][a];
      }
      acc[a] += t * p[i][a] + e_ginv - pdg_ginv;
    }
  }
  for (int a = 0; a < M; ++a) out[a] = F * acc[a];
}

using Kernel = void (*)(const GridMap&, std::size_t, double*);

Kernel kernel_for(const Dims& d) {
  switch (d.n * 10 + d.m) {
    case 21: return nondivergence_fixed<2, 1>;
    case 22: return nondivergence_fixed<2, 2>;
    case 23: return nondivergence_fixed<2, 3>;
    case 31: return nondivergence_fixed<3, 1>;
    case 32: return nondivergence_fixed<3, 2>;
    case 33: return nondivergence_fixed<3, 3>;
    case 41: return nondivergence_fixed<4, 1>;
    case 42: return nondivergence_fixed<4, 2>;
    case 43: return nondivergence_fixed<4, 3>;
  }
  throw InvalidArgument("residual: unsupported dimensions");
}

}  // namespace

void residual_nondivergence_unchecked(const GridMap& u, std::size_t idx, std::span<double> out) {
  kernel_for(u.dims())(u, idx, out.data());
}

double residual_sweep(const GridMap& u, std::span<const std::size_t> nodes, std::span<double> R) {
  const Kernel k = kernel_for(u.dims());
  const int m = u.dims().m;
  double sup = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    double* r = R.data() + j * m;
    k(u, nodes[j], r);
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += r[a] * r[a];
    sup = std::max(sup, std::sqrt(s));
  }
  return sup;
}

Vec residual_nondivergence(const GridMap& u, std::size_t idx) {
  require_interior(u, idx);
  Vec r(u.dims().m);
  residual_nondivergence_unchecked(u, idx, r);
  return r;
}

Vec residual_divergence(const GridMap& u, std::size_t idx) {
  require_interior(u, idx);
  const int n = u.dims().n, m = u.dims().m;
  const double h = u.h();
  Vec r(m, 0.0);
  // Slope at the half node idx + sign/2 e_i.
  auto half_slope = [&](int i, int sign) {
    const std::ptrdiff_t si = u.stride(i);
    const std::size_t lo = sign > 0 ? idx : idx - si;
    const std::size_t hi = lo + si;
    Slope A{n, m, {}};
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < m; ++a) {
        if (j == i) {
          A.a[j][a] = (u.value(hi, a) - u.value(lo, a)) / h;
        } else {
          const std::ptrdiff_t sj = u.stride(j);
          A.a[j][a] = (u.value(lo + sj, a) - u.value(lo - sj, a) + u.value(hi + sj, a) - u.value(hi - sj, a)) /
                      (4.0 * h);
        }
      }
    }
    return A;
  };
  for (int i = 0; i < n; ++i) {
    const Metric fwd = metric_of(half_slope(i, +1));
    const Metric bwd = metric_of(half_slope(i, -1));
    for (int a = 0; a < m; ++a) r[a] += (fwd.F * fwd.p[i][a] - bwd.F * bwd.p[i][a]) / h;
  }
  return r;
}

double coefficient_max_eigenvalue(const GridMap& u, std::size_t idx) {
  const int n = u.dims().n, m = u.dims().m;
  const Slope A = central_slope(u, idx);
  const Metric M = metric_of(A);
  // F (p_jb p_ia - p_ib p_ja + (delta_ij - p_i . A_j) ginv_ba)
  double PA[kMaxN][kMaxN];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < m; ++a) s += M.p[i][a] * A.a[j][a];
      PA[i][j] = (i == j ? 1.0 : 0.0) - s;
    }
  SymMatrix T(n * m);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < m; ++b) {
          if (i * m + a > j * m + b) continue;
          T.set(i * m + a, j * m + b,
                M.F * (M.p[j][b] * M.p[i][a] - M.p[i][b] * M.p[j][a] + PA[i][j] * M.ginv[b][a]));
        }
  return jacobi_eigen(T, 1e-8).values.back();
}

double sup_residual(const GridMap& u, std::span<const std::size_t> nodes, ResidualForm form) {
  double s = 0.0;
  Vec r(u.dims().m);
  for (std::size_t idx : nodes) {
    if (form == ResidualForm::NonDivergence) {
      require_interior(u, idx);
      residual_nondivergence_unchecked(u, idx, r);
    } else {
      r = residual_divergence(u, idx);
    }
    s = std::max(s, norm(r));
  }
  return s;
}

double discrete_area(const GridMap& u) {
  const int n = u.dims().n, m = u.dims().m;
  const double h = u.h();
  const double cell = std::pow(h, n);
  double total = 0.0;
  for (std::size_t idx : u.unit_region().members) {
    Slope A{n, m, {}};
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (u.axis_index(idx, i) == u.N() - 1) {
        ok = false;
        break;
      }
      const std::size_t nb = idx + u.stride(i);
      if (!u.in_mask(nb)) {
        ok = false;
        break;
      }
      for (int a = 0; a < m; ++a) A.a[i][a] = (u.value(nb, a) - u.value(idx, a)) / h;
    }
    if (!ok) continue;
    total += metric_of(A).F * cell;
  }
  return total;
}

}  // namespace msl
