#include "msl/solver.hpp"

#include <algorithm>
#include <cmath>

#include "msl/errors.hpp"
#include "msl/residual.hpp"

namespace msl {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::NotConverged:
      return "not_converged";
    case SolveStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

double tau_max(double h, int n, double lambda_hat) { return h * h / (4.0 * n * lambda_hat); }

namespace {

double estimate_lambda_hat(const GridMap& u) {
  double lam = 1e-300;
  for (std::size_t idx : u.unit_region().interior) lam = std::max(lam, coefficient_max_eigenvalue(u, idx));
  return lam;
}

double sup_abs_boundary(const GridMap& u) {
  double s = 0.0;
  for (std::size_t idx : u.unit_region().boundary) s = std::max(s, norm(u.at(idx)));
  return s;
}

}  // namespace

SolveReport solve_dirichlet(GridMap& u, const SolveParams& params) {
  if (params.tol_res <= 0.0 || params.max_iter < 0 || params.tau < 0.0 || params.reestimate_every < 1)
    throw InvalidArgument("solve_dirichlet: parameters must be positive");
  const Dims d = u.dims();
  const auto& interior = u.unit_region().interior;

  if (params.init == InitialGuess::Harmonic) {
    u = solve_laplace(u, 1e-12 * (1.0 + sup_abs_boundary(u)));
  } else if (params.init == InitialGuess::Zero) {
    for (std::size_t idx : interior)
      for (int a = 0; a < d.m; ++a) u.value(idx, a) = 0.0;
  }

  const double bound = 10.0 * (1.0 + sup_abs_boundary(u));
  SolveReport rep;
  std::vector<double> R(interior.size() * d.m);

  auto choose_tau = [&]() {
    rep.lambda_hat = estimate_lambda_hat(u);
    const double tmax = tau_max(u.h(), d.n, rep.lambda_hat);
    return params.tau > 0.0 ? std::min(params.tau, tmax) : tmax;
  };
  rep.lambda_hat = estimate_lambda_hat(u);
  const double tmax0 = tau_max(u.h(), d.n, rep.lambda_hat);
  if (params.tau > tmax0 * (1.0 + 1e-12))
    throw InvalidArgument("solve_dirichlet: tau exceeds the explicit stability bound tau_max(h)");
  rep.tau = params.tau > 0.0 ? params.tau : tmax0;

  for (long it = 0;; ++it) {
    if (it > 0 && it % params.reestimate_every == 0) rep.tau = choose_tau();
    if (params.area_check_every > 0 && it % params.area_check_every == 0)
      rep.area_trace.push_back(discrete_area(u));

    const double sup = residual_sweep(u, interior, R);
    rep.final_sup_residual = sup;
    rep.iterations = it;
    if (!std::isfinite(sup)) {
      rep.status = SolveStatus::Diverged;
      break;
    }
    if (sup <= params.tol_res) {
      rep.status = SolveStatus::Converged;
      rep.converged = true;
      break;
    }
    if (it >= params.max_iter) {
      rep.status = SolveStatus::NotConverged;
      break;
    }
    double umax = 0.0;
    for (std::size_t k = 0; k < interior.size(); ++k) {
      auto v = u.at(interior[k]);
      for (int a = 0; a < d.m; ++a) v[a] += rep.tau * R[k * d.m + a];
      umax = std::max(umax, norm(v));
    }
    if (!(umax <= bound)) {
      rep.status = SolveStatus::Diverged;
      rep.iterations = it + 1;
      break;
    }
  }
  return rep;
}

std::pair<GridMap, SolveReport> solve_dirichlet(const Dims& dims, int N, const BoundaryData& g,
                                                const SolveParams& params) {
  GridMap u(dims, N);
  u.fill_boundary(g);
  SolveReport rep = solve_dirichlet(u, params);
  return {std::move(u), rep};
}

GridMap solve_laplace(const GridMap& g, double tol, double radius, LaplaceReport* report) {
  const Region reg = radius == 1.0 ? g.unit_region() : g.region(radius);
  const int n = g.dims().n, m = g.dims().m;
  const double h = g.h();
  const double inv_h2 = 1.0 / (h * h);
  GridMap out = g;
  const std::size_t K = reg.interior.size();
  if (K == 0) {
    if (report) *report = {};
    return out;
  }
  // Position of each interior node in the unknown vector.
  std::vector<long> slot(g.size(), -1);
  for (std::size_t k = 0; k < K; ++k) slot[reg.interior[k]] = static_cast<long>(k);

  // y = (-Delta_h) x restricted to unknowns (boundary neighbours dropped).
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t idx = reg.interior[k];
      double s = 2.0 * n * x[k];
      for (int i = 0; i < n; ++i) {
        const long up = slot[idx + g.stride(i)];
        const long dn = slot[idx - g.stride(i)];
        if (up >= 0) s -= x[up];
        if (dn >= 0) s -= x[dn];
      }
      y[k] = s * inv_h2;
    }
  };

  int total_iters = 0;
  double worst = 0.0;
  for (int a = 0; a < m; ++a) {
    std::vector<double> b(K, 0.0), x(K), r(K), p(K), Ap(K);
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t idx = reg.interior[k];
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::size_t up = idx + g.stride(i);
        const std::size_t dn = idx - g.stride(i);
        if (slot[up] < 0) s += g.value(up, a);
        if (slot[dn] < 0) s += g.value(dn, a);
      }
      b[k] = s * inv_h2;
      x[k] = g.value(idx, a);
    }
    auto sup_res = [&]() {
      apply(x, Ap);
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        r[k] = b[k] - Ap[k];
        s = std::max(s, std::abs(r[k]));
      }
      return s;
    };
    double sup = sup_res();
    int iters = 0;
    const int max_iters = static_cast<int>(20 * K + 100);
    // Restarted CG: the explicit residual refresh keeps the sup-norm check honest.
    while (sup > tol && iters < max_iters) {
      p = r;
      double rr = dot(r, r);
      for (int inner = 0; inner < 200 && iters < max_iters; ++inner, ++iters) {
        apply(p, Ap);
        const double alpha = rr / dot(p, Ap);
        for (std::size_t k = 0; k < K; ++k) {
          x[k] += alpha * p[k];
          r[k] -= alpha * Ap[k];
        }
        const double rr_new = dot(r, r);
        double rmax = 0.0;
        for (double v : r) rmax = std::max(rmax, std::abs(v));
        if (rmax <= 0.5 * tol) {
          ++iters;
          break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k = 0; k < K; ++k) p[k] = r[k] + beta * p[k];
      }
      const double prev = sup;
      sup = sup_res();
      if (sup >= prev && sup > tol && iters >= 200) break;  // stagnated at roundoff
    }
    if (sup > tol) throw NotConverged("solve_laplace: residual " + std::to_string(sup) + " above tolerance");
    for (std::size_t k = 0; k < K; ++k) out.value(reg.interior[k], a) = x[k];
    total_iters += iters;
    worst = std::max(worst, sup);
  }
  if (report) *report = {total_iters, worst};
  return out;
}

Vec lawson_osserman(std::span<const double> x) {
  if (x.size() != 4) throw InvalidArgument("lawson_osserman: expects a point of R^4");
  const double r2 = dot(x, x);
  if (r2 == 0.0) return Vec(3, 0.0);
  // z1 = x0 + i x1, z2 = x2 + i x3; eta = (|z1|^2 - |z2|^2, 2 z1 conj(z2)) is quadratic,
  // so |x| eta(x/|x|) = eta(x)/|x|.
  const double a = x[0], b = x[1], c = x[2], d = x[3];
  const double s = 0.5 * std::sqrt(5.0) / std::sqrt(r2);
  return {s * (a * a + b * b - c * c - d * d), s * 2.0 * (a * c + b * d), s * 2.0 * (b * c - a * d)};
}

double harmonic_replacement_gap(const GridMap& u, double r, double tol) {
  const GridMap h = solve_laplace(u, tol, r);
  double gap = 0.0;
  for (std::size_t idx : u.nodes_in_ball(r)) {
    double s = 0.0;
    for (int a = 0; a < u.dims().m; ++a) {
      const double e = u.value(idx, a) - h.value(idx, a);
      s += e * e;
    }
    gap = std::max(gap, std::sqrt(s));
  }
  return gap;
}

}  // namespace msl
