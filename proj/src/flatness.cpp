#include "msl/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <list>
#include <numbers>

#include "msl/errors.hpp"
#include "msl/interp.hpp"

namespace msl {

namespace {

// Smallest ball with every support point on its boundary (circumsphere in
// the affine hull). Returns false when the support is affinely dependent.
bool circumball(const std::vector<const Vec*>& sup, EnclosingBall& B) {
  const std::size_t k = sup.size();
  if (k == 0) {
    B.radius = -1.0;
    return true;
  }
  const Vec& p0 = *sup[0];
  const int m = static_cast<int>(p0.size());
  B.center = p0;
  B.radius = 0.0;
  if (k == 1) return true;
  const int r = static_cast<int>(k) - 1;
  Matrix G(r, r);
  Vec rhs(r);
  std::vector<Vec> V(r, Vec(m));
  for (int j = 0; j < r; ++j)
    for (int a = 0; a < m; ++a) V[j][a] = (*sup[j + 1])[a] - p0[a];
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) G(i, j) = 2.0 * dot(V[i], V[j]);
    rhs[i] = dot(V[i], V[i]);
  }
  Vec lam;
  try {
    lam = solve(G, rhs);
  } catch (const DegenerateSample&) {
    return false;
  }
  Vec c = p0;
  for (int j = 0; j < r; ++j)
    for (int a = 0; a < m; ++a) c[a] += lam[j] * V[j][a];
  double rad = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += ((*sup[j])[a] - c[a]) * ((*sup[j])[a] - c[a]);
    rad = std::max(rad, std::sqrt(s));
  }
  B.center = std::move(c);
  B.radius = rad;
  return true;
}

bool outside(const EnclosingBall& B, const Vec& p) {
  if (B.radius < 0.0) return true;
  double s = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) s += (p[a] - B.center[a]) * (p[a] - B.center[a]);
  return std::sqrt(s) > B.radius * (1.0 + 1e-12) + 1e-300;
}

}  // namespace

EnclosingBall smallest_enclosing_ball(const std::vector<Vec>& points) {
  EnclosingBall out;
  if (points.empty()) return out;
  const std::size_t m = points[0].size();
  // Move-to-front recursion (support size <= m + 1).
  std::list<std::size_t> L;
  for (std::size_t i = 0; i < points.size(); ++i) L.push_back(i);
  std::vector<const Vec*> sup;
  EnclosingBall B;
  std::function<void(std::list<std::size_t>::iterator)> mtf = [&](std::list<std::size_t>::iterator end) {
    circumball(sup, B);
    if (sup.size() == m + 1) return;
    for (auto k = L.begin(); k != end;) {
      auto j = k++;
      if (!outside(B, points[*j])) continue;
      sup.push_back(&points[*j]);
      EnclosingBall probe;
      if (!circumball(sup, probe)) {
        sup.pop_back();
        continue;
      }
      mtf(j);
      sup.pop_back();
      L.splice(L.begin(), L, j);
    }
  };
  mtf(L.end());
  out = B;
  if (out.radius < 0.0) out.radius = 0.0;
  return out;
}

namespace {

std::vector<Vec> images(const GridMap& u, double r, const std::function<void(std::span<const double>, std::span<double>)>& sub) {
  const Dims& d = u.dims();
  std::vector<Vec> pts;
  Vec x(d.n), s(d.m);
  for (std::size_t idx : u.nodes_in_ball(r)) {
    Vec p(u.at(idx).begin(), u.at(idx).end());
    if (sub) {
      u.coords(idx, x);
      sub(x, s);
      for (int a = 0; a < d.m; ++a) p[a] -= s[a];
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

double sup_dev(const GridMap& u, double r, const std::function<void(std::span<const double>, std::span<double>)>& f) {
  double out = 0.0;
  for (const Vec& p : images(u, r, f)) out = std::max(out, norm(p));
  return out;
}

}  // namespace

double oscillation(const GridMap& u, double r) { return smallest_enclosing_ball(images(u, r, {})).radius; }

double oscillation(const GridMap& u, double r, const AffineMap& l) {
  return smallest_enclosing_ball(images(u, r, [&](auto x, auto o) { l.eval(x, o); })).radius;
}

double oscillation(const GridMap& u, double r, const QuadraticMap& q) {
  return smallest_enclosing_ball(images(u, r, [&](auto x, auto o) { q.eval(x, o); })).radius;
}

double sup_deviation(const GridMap& u, double r, const QuadraticMap& q) {
  return sup_dev(u, r, [&](auto x, auto o) { q.eval(x, o); });
}

double sup_deviation(const GridMap& u, double r, const AffineMap& l) {
  return sup_dev(u, r, [&](auto x, auto o) { l.eval(x, o); });
}

AffineMap best_affine_fit(const GridMap& u, double r) {
  const Dims& d = u.dims();
  const auto nodes = u.nodes_in_ball(r);
  const int rows = static_cast<int>(nodes.size());
  if (rows < d.n + 1) throw DegenerateSample("best_affine_fit: too few lattice points in the ball");
  Matrix M(rows, d.n + 1), B(rows, d.m);
  Vec x(d.n);
  for (int k = 0; k < rows; ++k) {
    u.coords(nodes[k], x);
    M(k, 0) = 1.0;
    for (int i = 0; i < d.n; ++i) M(k, i + 1) = x[i];
    for (int a = 0; a < d.m; ++a) B(k, a) = u.value(nodes[k], a);
  }
  const Matrix C = least_squares(M, B);
  AffineMap l = AffineMap::zero(d);
  for (int a = 0; a < d.m; ++a) {
    l.b[a] = C(0, a);
    for (int i = 0; i < d.n; ++i) l.A(i, a) = C(i + 1, a);
  }
  return l;
}

QuadraticMap best_harmonic_quadratic_fit(const GridMap& u, double r) {
  const Dims& d = u.dims();
  const int n = d.n;
  const auto nodes = u.nodes_in_ball(r);
  const int rows = static_cast<int>(nodes.size());
  // Columns: 1, x_i, x_i x_j (i < j), x_i^2 - x_{n-1}^2 (i < n-1).
  const int cols = 1 + n + n * (n - 1) / 2 + (n - 1);
  if (rows < cols) throw NonHarmonicFit("best_harmonic_quadratic_fit: too few lattice points in the ball");
  Matrix M(rows, cols), B(rows, d.m);
  Vec x(n);
  for (int k = 0; k < rows; ++k) {
    u.coords(nodes[k], x);
    int c = 0;
    M(k, c++) = 1.0;
    for (int i = 0; i < n; ++i) M(k, c++) = x[i];
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) M(k, c++) = x[i] * x[j];
    for (int i = 0; i + 1 < n; ++i) M(k, c++) = x[i] * x[i] - x[n - 1] * x[n - 1];
    for (int a = 0; a < d.m; ++a) B(k, a) = u.value(nodes[k], a);
  }
  Matrix C;
  try {
    C = least_squares(M, B);
  } catch (const DegenerateSample& e) {
    throw NonHarmonicFit(e.what());
  }
  QuadraticMap q = QuadraticMap::zero(d);
  for (int a = 0; a < d.m; ++a) {
    int c = 0;
    q.b[a] = C(c++, a);
    for (int i = 0; i < n; ++i) q.A(i, a) = C(c++, a);
    Matrix Q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) Q(i, j) = Q(j, i) = 0.5 * C(c++, a);
    for (int i = 0; i + 1 < n; ++i) {
      const double v = C(c++, a);
      Q(i, i) += v;
      Q(n - 1, n - 1) -= v;
    }
    q.Q[a] = SymMatrix(Q);
  }
  return q;
}

double harnack_decay(const GridMap& u, const AffineMap& l, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("harnack_decay: eps must be positive");
  const double full = oscillation(u, 1.0, l);
  if (full > eps * (1.0 + 1e-12)) throw FlatnessViolated("oscillation of u - l on B_1 exceeds eps");
  return 1.0 - oscillation(u, 0.5, l) / eps;
}

AffineStep improve_flatness_step(const GridMap& u, const AffineMap& l, double eps, double eta) {
  if (!(eps > 0.0)) throw InvalidArgument("improve_flatness_step: eps must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("improve_flatness_step: eta must lie in (0, 1)");
  if (sup_deviation(u, 1.0, l) > eps * (1.0 + 1e-12)) throw FlatnessViolated("|u - l| exceeds eps on B_1");
  AffineStep s;
  s.fit = best_affine_fit(u, eta);
  s.new_eps = sup_deviation(u, eta, s.fit);
  s.ratio = s.new_eps / (eps * eta);
  return s;
}

QuadraticStep improve_flatness_quadratic(const GridMap& u, const QuadraticMap& q, double eps, double eta,
                                         double beta, double eps0) {
  if (!(eps > 0.0)) throw InvalidArgument("improve_flatness_quadratic: eps must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("improve_flatness_quadratic: eta must lie in (0, 1)");
  if (!(beta > 0.5 && beta < 1.0)) throw InvalidArgument("improve_flatness_quadratic: beta must lie in (1/2, 1)");
  if (eps > eps0) throw PreconditionUnmet("eps exceeds eps0");
  if (!q.is_harmonic(1e-12 * (1.0 + q.quadratic_bound()))) throw PreconditionUnmet("q is not harmonic");
  if (q.quadratic_bound() > std::pow(eps, beta) * (1.0 + 1e-12))
    throw PreconditionUnmet("quadratic coefficients of q exceed eps^beta");
  if (sup_deviation(u, 1.0, q) > eps * (1.0 + 1e-12)) throw FlatnessViolated("|u - q| exceeds eps on B_1");
  QuadraticStep s;
  s.fit = best_harmonic_quadratic_fit(u, eta);
  s.new_eps = sup_deviation(u, eta, s.fit);
  s.ratio = s.new_eps / (eps * eta * eta);
  return s;
}

double unit_ball_volume(int n) { return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

double density_ratio(const GridMap& u, std::span<const double> x0, double r, int subcells) {
  const Dims& d = u.dims();
  const int n = d.n, m = d.m;
  const double h = u.h();
  if (r < 4.0 * h) throw ScaleTooFine("density_ratio: radius below 4h");
  if (subcells <= 0) subcells = n <= 3 ? 4 : 2;
  const GridInterpolant gi(u);
  Vec u0(m);
  gi.eval(x0, u0);

  const int corners = 1 << n;
  std::vector<std::ptrdiff_t> coff(corners, 0);
  for (int c = 0; c < corners; ++c)
    for (int i = 0; i < n; ++i)
      if ((c >> i) & 1) coff[c] += u.stride(i);
  int subs = 1;
  for (int i = 0; i < n; ++i) subs *= subcells;
  const double reach = r + h * std::sqrt(static_cast<double>(n));

  double area = 0.0;
  Vec x(n), grad_avg(n * m), val(m);
  std::vector<double> cw(corners);
  Gradient A(n, m);
  for (std::size_t idx : u.unit_region().members) {
    bool full = true;
    for (int i = 0; i < n && full; ++i) full = u.axis_index(idx, i) + 1 < u.N();
    if (!full) continue;
    for (int c = 0; c < corners && full; ++c) full = u.in_mask(idx + coff[c]);
    if (!full) continue;
    u.coords(idx, x);
    double dx = 0.0;
    for (int i = 0; i < n; ++i) dx += (x[i] + 0.5 * h - x0[i]) * (x[i] + 0.5 * h - x0[i]);
    if (std::sqrt(dx) > reach) continue;

    // Average slope over the cell (exact for multilinear data).
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int c = 0; c < corners; ++c) {
          if ((c >> i) & 1) continue;
          s += u.value(idx + coff[c] + u.stride(i), a) - u.value(idx + coff[c], a);
        }
        A(i, a) = s / (h * (corners / 2));
      }
    const double F = area_integrand(A);

    int inside = 0;
    std::vector<int> j(n, 0);
    for (int sidx = 0; sidx < subs; ++sidx) {
      int t = sidx;
      for (int i = 0; i < n; ++i) {
        j[i] = t % subcells;
        t /= subcells;
      }
      double dist2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double xi = x[i] + h * (j[i] + 0.5) / subcells - x0[i];
        dist2 += xi * xi;
      }
      if (dist2 > r * r) continue;
      for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
          const double ti = (j[i] + 0.5) / subcells;
          w *= ((c >> i) & 1) ? ti : 1.0 - ti;
        }
        cw[c] = w;
      }
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int c = 0; c < corners; ++c) s += cw[c] * u.value(idx + coff[c], a);
        const double dz = s - u0[a];
        dist2 += dz * dz;
      }
      if (dist2 <= r * r) ++inside;
    }
    area += F * std::pow(h, n) * inside / subs;
  }
  return area / (unit_ball_volume(n) * std::pow(r, n));
}

HarnackMeasureReport harnack_measure_experiment(const GridMap& u, const AffineMap& l, double eps, const Vec& xi,
                                                double eta_small, const std::vector<double>& Cs) {
  const Dims& d = u.dims();
  if (!(eps > 0.0) || !(eta_small > 0.0)) throw InvalidArgument("harnack_measure_experiment: eps, eta must be positive");
  if (static_cast<int>(xi.size()) != d.m || norm(xi) == 0.0) throw InvalidArgument("xi must be a nonzero vector in R^m");
  Vec e = xi;
  const double en = norm(e);
  for (double& v : e) v /= en;

  const auto nodes = u.nodes_in_ball(1.0);
  std::vector<Vec> ut;
  ut.reserve(nodes.size());
  Vec x(d.n), lv(d.m);
  HarnackMeasureReport rep;
  rep.xi = e;
  rep.eta_small = eta_small;
  rep.x0_distance = std::numeric_limits<double>::infinity();
  for (std::size_t idx : nodes) {
    u.coords(idx, x);
    l.eval(x, lv);
    Vec t(d.m);
    for (int a = 0; a < d.m; ++a) t[a] = (u.value(idx, a) - lv[a]) / eps;
    if (norm(t) > 1.0 + 1e-9) throw FlatnessViolated("|u - l| exceeds eps on B_1");
    if (dot(x, x) <= 0.25 * (1 + 1e-12)) {
      double s = 0.0;
      for (int a = 0; a < d.m; ++a) s += (t[a] - e[a]) * (t[a] - e[a]);
      if (std::sqrt(s) < rep.x0_distance) {
        rep.x0_distance = std::sqrt(s);
        rep.x0 = x;
      }
    }
    ut.push_back(std::move(t));
  }
  if (!(rep.x0_distance <= eta_small)) throw PreconditionUnmet("no point of B_1/2 has u~ within eta of xi");

  for (double C : Cs) {
    MeasureRow row;
    row.C = C;
    row.inclusion_radius = std::sqrt(8.0 * C * eta_small);
    std::size_t in_set = 0, included = 0;
    for (const Vec& t : ut) {
      double sp = 0.0, sm = 0.0;
      for (int a = 0; a < d.m; ++a) {
        sp += (t[a] + e[a]) * (t[a] + e[a]);
        sm += (t[a] - e[a]) * (t[a] - e[a]);
      }
      if (0.5 * std::sqrt(sp) > 1.0 - C * eta_small) {
        ++in_set;
        if (std::sqrt(sm) <= row.inclusion_radius * (1.0 + 1e-12) + 1e-12) ++included;
      }
    }
    row.measure_fraction = static_cast<double>(in_set) / ut.size();
    row.inclusion_fraction = in_set ? static_cast<double>(included) / in_set : 1.0;
    rep.rows.push_back(row);
  }
  return rep;
}

std::pair<GridMap, SolveReport> rescale_and_solve(const GridMap& u, double eta, const SolveParams& params,
                                                  const Vec& offset) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("rescale: eta must lie in (0, 1)");
  const int m = u.dims().m;
  if (!offset.empty() && static_cast<int>(offset.size()) != m) throw InvalidArgument("rescale: offset must lie in R^m");
  const GridInterpolant gi(u);
  GridMap v(u.dims(), u.N());
  Vec x(u.dims().n);
  v.fill([&](std::span<const double> y, std::span<double> out) {
    for (int i = 0; i < u.dims().n; ++i) x[i] = eta * y[i];
    gi.eval(x, out);
    for (int a = 0; a < m; ++a) out[a] = (out[a] - (offset.empty() ? 0.0 : offset[a])) / eta;
  });
  SolveParams p = params;
  p.init = InitialGuess::Given;
  SolveReport rep = solve_dirichlet(v, p);
  return {std::move(v), rep};
}

FlatnessTrace flatness_trace(const GridMap& u0, const AffineMap& l0, double eps0, double eta, int steps,
                             const SolveParams& params) {
  FlatnessTrace tr;
  tr.eta = eta;
  GridMap u = u0;
  AffineMap l = l0;
  double eps = eps0;
  long iters = 0;
  for (int k = 0; k < steps; ++k) {
    TraceRow row;
    row.k = k;
    row.r = std::pow(eta, k);
    row.eps = eps;
    row.osc = oscillation(u, 1.0, l);
    row.solve_iterations = iters;
    const AffineStep s = improve_flatness_step(u, l, eps, eta);
    row.new_eps = s.new_eps;
    row.ratio = s.ratio;
    row.fit = s.fit;
    row.slope = s.fit.slope_norm();
    tr.rows.push_back(row);
    if (k + 1 == steps) break;
    auto [v, rep] = rescale_and_solve(u, eta, params, s.fit.b);
    if (!rep.converged) throw NotConverged("flatness_trace: rescaled solve did not converge");
    iters = rep.iterations;
    l = s.fit;
    std::fill(l.b.begin(), l.b.end(), 0.0);
    u = std::move(v);
    eps = std::max(sup_deviation(u, 1.0, l), std::numeric_limits<double>::min());
  }
  return tr;
}

}  // namespace msl
