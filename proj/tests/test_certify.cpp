#include <cmath>

#include "doctest.h"
#include "msl/certify.hpp"
#include "msl/errors.hpp"
#include "msl/solver.hpp"
#include "oracles.hpp"

using namespace msl;

namespace {

SamplerSpec cylinder(const QuadraticMap& center, double lo, double hi, std::uint64_t seed = 1) {
  SamplerSpec s{CylinderRegion{center, 0.75, lo, hi}};
  s.seed = seed;
  return s;
}

AffineMap tilted(const Dims& d, double slope) {
  AffineMap l = AffineMap::zero(d);
  for (int a = 0; a < d.m; ++a) l.b[a] = 0.1 * (a + 1);
  for (int i = 0; i < d.n; ++i)
    for (int a = 0; a < d.m; ++a) l.A(i, a) = std::cos(1.0 + i + 2.0 * a);
  l.A *= slope / l.slope_norm();
  return l;
}

QuadraticMap saddle(const Dims& d, double c) {
  QuadraticMap q = QuadraticMap::zero(d);
  SymMatrix Q(d.n);
  Q.set(0, 0, c);
  Q.set(1, 1, -c);
  q.Q[0] = Q;
  return q;
}

FieldPtr l35_saddle(const Dims& d, double eps, double eta) {
  return family_l35(std::make_shared<QuadraticFunction>(saddle(d, 1.0)), QuadraticMap::zero(d), eps, eta);
}

FieldPtr quadratic_saddle(const Dims& d, double eps, double beta) {
  return family_quadratic(saddle(d, std::pow(eps, beta)), eps, beta);
}

// H = -z_1 + a |x|^2 + b |z|^2.
FieldPtr bowl_field(const Dims& d, double a, double b) {
  const int n = d.n;
  auto value = [=](std::span<const double> X) {
    double s = -X[n];
    for (int i = 0; i < static_cast<int>(X.size()); ++i) s += (i < n ? a : b) * X[i] * X[i];
    return s;
  };
  auto grad = [=](std::span<const double> X) {
    Vec g(X.size());
    for (int i = 0; i < static_cast<int>(X.size()); ++i) g[i] = 2 * (i < n ? a : b) * X[i];
    g[n] -= 1.0;
    return g;
  };
  auto hess = [=](std::span<const double> X) {
    SymMatrix H(static_cast<int>(X.size()));
    for (int i = 0; i < static_cast<int>(X.size()); ++i) H.set(i, i, 2 * (i < n ? a : b));
    return H;
  };
  return raw_field(d, "bowl", value, grad, hess);
}

GridMap affine_grid(const Dims& d, int N) {
  const AffineMap l = tilted(d, 0.6);
  GridMap u(d, N);
  u.fill([&](std::span<const double> x, std::span<double> out) { l.eval(x, out); });
  return u;
}

void flat_boundary(std::span<const double> x, std::span<double> out) {
  out[0] = 0.01 * (x[0] * x[0] - x[1] * x[1]) + 0.01 * x[0] * x[0] * x[0];
  out[1] = 0.01 * x[0] * x[1] + 0.005 * std::sin(3 * x[1]);
}

int violations(const std::vector<TouchingReport>& r) {
  int v = 0;
  for (const auto& t : r) v += t.violation;
  return v;
}

}  // namespace

TEST_CASE("certify_region on spheres") {
  for (int n : {2, 3}) {
    const Dims d{n, 2};
    SamplerSpec s{BallRegion{Vec(d.ambient(), 0.3), 0.5}};
    const auto up = certify_region(*sphere_field(Vec(d.ambient(), 0.0), 1.0, n), s, n);
    CHECK(up.verdict == Verdict::Pass);
    CHECK(up.min_margin == doctest::Approx(2.0 * n).epsilon(1e-12));
    const auto down = certify_region(*sphere_field(Vec(d.ambient(), 0.0), -1.0, n), s, n);
    CHECK(down.verdict == Verdict::Fail);
    CHECK(down.min_margin == doctest::Approx(-2.0 * n).epsilon(1e-12));
    CHECK(up.retained_count + up.excluded_count == up.sample_count);
    CHECK(up.lattice_count + up.quasi_count == up.sample_count);
  }
}

TEST_CASE("sampler: points lie in the region and are reproducible from the seed") {
  const Dims d{2, 2};
  const QuadraticMap q = saddle(d, 0.3);
  const double eps = 0.05;
  const SamplerSpec s = cylinder(q, eps / 10, eps, 9);
  const SampleSet a = sample_region(s, d);
  const SampleSet b = sample_region(s, d);
  CHECK(a.quasi_count == 1000);
  CHECK(a.lattice_count > 0);
  CHECK(a.z_spacing == doctest::Approx(eps / 8));
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i] == b.points[i]);
    const Vec& X = a.points[i];
    const std::span<const double> x = std::span<const double>(X).first(2);
    CHECK(norm(x) <= 0.75 * (1 + 1e-12));
    const Vec c = q(x);
    const double r = std::hypot(X[2] - c[0], X[3] - c[1]);
    CHECK(r >= eps / 10 * (1 - 1e-9));
    CHECK(r <= eps * (1 + 1e-9));
  }
  SamplerSpec other = s;
  other.seed = 10;
  const SampleSet c = sample_region(other, d);
  CHECK(c.points[a.lattice_count] != a.points[a.lattice_count]);
}

TEST_CASE("certificates do not depend on the worker count") {
  const Dims d{3, 2};
  const auto H = family_l1(tilted(d, 1.0), 1e-2);
  const SamplerSpec s = cylinder(QuadraticMap::from_affine(tilted(d, 1.0)), 1e-3, 1e-2, 4);
  CertifyOptions one, many;
  one.workers = 1;
  many.workers = 4;
  const auto a = certify_region(*H, s, d.n, one);
  const auto b = certify_region(*H, s, d.n, many);
  CHECK(a.min_margin == b.min_margin);
  CHECK(a.retained_count == b.retained_count);
  REQUIRE(a.worst.size() == b.worst.size());
  for (std::size_t i = 0; i < a.worst.size(); ++i) {
    CHECK(a.worst[i].X == b.worst[i].X);
    CHECK(a.worst[i].margin == b.worst[i].margin);
    if (i > 0) CHECK(a.worst[i - 1].margin <= a.worst[i].margin);
  }
}

TEST_CASE("family_l1 passes on its cylinder for slopes up to one") {
  const double eps = 1e-2;
  for (Dims d : {Dims{2, 1}, Dims{2, 2}, Dims{3, 2}, Dims{2, 3}}) {
    for (double slope : {0.0, 0.5, 1.0}) {
      const AffineMap l = tilted(d, slope);
      const auto cert = certify_region(*family_l1(l, eps), cylinder(QuadraticMap::from_affine(l), eps / 10, eps), d.n);
      CHECK(cert.verdict == Verdict::Pass);
      CHECK(cert.min_margin > 0.0);
      CHECK(cert.tube_excluded == 0);
    }
  }
}

TEST_CASE("family_l1 margins shrink to zero with the profile scale") {
  const Dims d{2, 2};
  const double eps = 1e-2;
  const AffineMap l = tilted(d, 0.8);
  const SamplerSpec s = cylinder(QuadraticMap::from_affine(l), eps / 10, eps);
  double previous = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    const auto cert = certify_region(*family_l1(l, eps, paraboloid_profile(d.n, scale / (4.0 * d.n))), s, d.n);
    CHECK(cert.verdict == Verdict::Pass);
    CHECK(cert.min_margin <= previous);
    previous = cert.min_margin;
  }
  const auto flat = certify_region(*family_l1(l, eps, paraboloid_profile(d.n, 0.0)), s, d.n);
  CHECK(flat.verdict == Verdict::Degenerate);
  CHECK(std::abs(flat.min_margin) < 1e-6);
}

TEST_CASE("an all-excluded region raises EmptySampleSet") {
  const Dims d{2, 1};
  const auto H = family_l1(AffineMap::zero(d), 1.0);
  SamplerSpec s = cylinder(QuadraticMap::zero(d), 0.0, 0.05);
  s.quasi = 50;
  CHECK_THROWS_AS(certify_region(*H, s, d.n), EmptySampleSet);
}

TEST_CASE("family_l35 with h = 0: positive margins vanishing with eta") {
  const Dims d{2, 2};
  const double eps = 1e-2;
  const auto zero = std::make_shared<QuadraticFunction>(QuadraticMap::zero(d));
  const SamplerSpec s = cylinder(QuadraticMap::zero(d), eps / 10, eps);
  double previous = std::numeric_limits<double>::infinity();
  for (double eta : {1.0, 0.1, 0.01, 1e-3}) {
    const auto cert = certify_region(*family_l35(zero, QuadraticMap::zero(d), eps, eta), s, d.n);
    CHECK(cert.verdict == Verdict::Pass);
    CHECK(cert.min_margin > 0.0);
    CHECK(cert.min_margin < previous);
    previous = cert.min_margin;
  }
  CHECK(previous < 0.01);
  const auto flat = certify_region(*family_l35_unchecked(zero, QuadraticMap::zero(d), eps, 0.0), s, d.n);
  CHECK(flat.verdict == Verdict::Degenerate);
}

TEST_CASE("family_l35 with a harmonic saddle: pass below a stable threshold") {
  for (Dims d : {Dims{2, 1}, Dims{2, 2}}) {
    const double eta = 0.5;
    CHECK(certify_region(*l35_saddle(d, 1e-2, eta), cylinder(QuadraticMap::zero(d), 0.0, 1e-2), d.n).verdict ==
          Verdict::Pass);
    CHECK(certify_region(*l35_saddle(d, 2.0, eta), cylinder(QuadraticMap::zero(d), 0.0, 2.0), d.n).verdict ==
          Verdict::Fail);
    auto threshold = [&](int x_points, double z_divisor, int quasi) {
      return bisect_threshold(
          [&](double eps) {
            SamplerSpec s = cylinder(QuadraticMap::zero(d), 0.0, eps);
            s.x_points = x_points;
            s.z_divisor = z_divisor;
            s.quasi = quasi;
            return certify_region(*l35_saddle(d, eps, eta), s, d.n).verdict == Verdict::Pass;
          },
          1e-3, 2.0, 16);
    };
    const auto coarse = threshold(9, 8, 1000);
    const auto fine = threshold(13, 12, 2000);
    REQUIRE(coarse.bracketed);
    REQUIRE(fine.bracketed);
    MESSAGE("l35 saddle n=" << d.n << " m=" << d.m << " eps* " << coarse.eps_star << " / " << fine.eps_star);
    CHECK(std::abs(fine.eps_star / coarse.eps_star - 1.0) <= 0.2);
  }
}

TEST_CASE("quadratic family with coefficients eps^beta") {
  const double beta = 0.75;
  for (Dims d : {Dims{2, 1}, Dims{2, 2}, Dims{3, 2}}) {
    const double eps = 1e-2;
    const QuadraticMap q = saddle(d, std::pow(eps, beta));
    const auto cert = certify_region(*quadratic_saddle(d, eps, beta), cylinder(q, eps / 10, eps), d.n);
    CHECK(cert.verdict == Verdict::Pass);
    const auto r = bisect_threshold(
        [&](double e) {
          return certify_region(*quadratic_saddle(d, e, beta), cylinder(saddle(d, std::pow(e, beta)), e / 10, e), d.n)
                     .verdict == Verdict::Pass;
        },
        1e-3, 1.0, 14);
    REQUIRE(r.bracketed);
    MESSAGE("quadratic family n=" << d.n << " m=" << d.m << " eps0 " << r.eps_star);
    const double above = std::min(1.0, 2 * r.eps_fail);
    CHECK(certify_region(*quadratic_saddle(d, above, beta), cylinder(saddle(d, std::pow(above, beta)), above / 10, above),
                         d.n)
              .verdict != Verdict::Pass);
  }
}

TEST_CASE("bisect_threshold brackets a step") {
  const auto r = bisect_threshold([](double e) { return e <= 0.037; }, 1e-4, 1.0, 40);
  CHECK(r.bracketed);
  CHECK(r.eps_star <= 0.037);
  CHECK(r.eps_fail > 0.037);
  CHECK(r.eps_fail / r.eps_star < 1 + 1e-9);
  CHECK_FALSE(bisect_threshold([](double) { return false; }, 1e-4, 1.0).bracketed);
  CHECK(bisect_threshold([](double) { return true; }, 1e-4, 1.0).eps_star == 1.0);
  CHECK_THROWS_AS(bisect_threshold([](double) { return true; }, 1.0, 0.5), InvalidArgument);
}

TEST_CASE("touching: spheres around an affine graph peak on the boundary") {
  const Dims d{2, 2};
  const GridMap u = affine_grid(d, 21);
  Vec X0{0.1, -0.2, 3.0, -1.0};
  const auto rep = touching_check(u, *sphere_field(X0, 1.0, d.n));
  CHECK_FALSE(rep.interior);
  CHECK_FALSE(rep.violation);
  CHECK(rep.excess == 0.0);
  CHECK(norm(rep.argmax.x) > 0.8);
}

TEST_CASE("touching: a convex non-solution is touched from inside by a bowl") {
  for (int n : {2, 3}) {
    const Dims d{n, 2};
    GridMap u(d, 21);
    u.fill([](std::span<const double> x, std::span<double> out) {
      out[0] = 0.5 * dot(x, x);
      out[1] = 0.0;
    });
    const auto rep = touching_check(u, *bowl_field(d, 0.25, 0.5));
    CHECK(rep.interior);
    CHECK(norm(rep.argmax.x) < 1e-12);
    CHECK(rep.certified);
    CHECK(rep.violation);
    CHECK(rep.excess > 0.0);
    CHECK(rep.local_min_margin > 0.0);
    // -H is not a comparison function: the same touching is not a violation.
    const auto neg = touching_check(u, *bowl_field(d, 0.75, -0.5));
    CHECK_FALSE(neg.violation);
  }
}

TEST_CASE("touching verdicts are invariant under constant shifts") {
  const Dims d{2, 2};
  GridMap u(d, 21);
  u.fill([](std::span<const double> x, std::span<double> out) {
    out[0] = 0.5 * dot(x, x);
    out[1] = 0.1 * x[0];
  });
  for (const FieldPtr& H : {bowl_field(d, 0.25, 0.5), sphere_field(Vec{0.2, 0.1, 2.0, 0.0}, 1.0, 2),
                            family_l1(tilted(d, 0.3), 0.4)}) {
    const auto a = touching_check(u, *H);
    for (double c : {-3.0, 0.5, 100.0}) {
      const auto b = touching_check(u, *shifted_field(H, c));
      CHECK(a.violation == b.violation);
      CHECK(a.interior == b.interior);
      CHECK(a.argmax_node == b.argmax_node);
      CHECK(b.max_value == doctest::Approx(a.max_value + c).epsilon(1e-12));
    }
  }
}

TEST_CASE("viscosity screen: affine and solved maps are violation-free, a bump is caught") {
  const Dims d{2, 2};
  const int N = GridMap::default_points(d.n);
  for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(violations(viscosity_screen(affine_grid(d, N), seed, 100)) == 0);

  auto [u, rep] = solve_dirichlet(d, N, flat_boundary);
  REQUIRE(rep.converged);
  CHECK(violations(viscosity_screen(u, 7, 100)) == 0);

  GridMap bumped = u;
  for (std::size_t i : u.unit_region().members) {
    const Vec x = u.coords(i);
    const double r2 = dot(x, x);
    if (r2 < 0.25) bumped.value(i, 0) += 1e-2 * std::pow(1 - r2 / 0.25, 3);
  }
  CHECK(violations(viscosity_screen(bumped, 7, 100)) >= 1);
}

TEST_CASE("viscosity screen is reproducible and worker independent") {
  const Dims d{2, 1};
  GridMap u(d, 21);
  u.fill([](std::span<const double> x, std::span<double> out) { out[0] = 0.05 * x[0] * x[1] + 0.02 * x[0] * x[0]; });
  ScreenOptions one, many;
  one.workers = 1;
  many.workers = 3;
  const auto a = viscosity_screen(u, 11, 12, one);
  const auto b = viscosity_screen(u, 11, 12, many);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].max_value == b[k].max_value);
    CHECK(a[k].argmax_node == b[k].argmax_node);
    CHECK(a[k].violation == b[k].violation);
    CHECK(a[k].field.family == screen_field(u, 11, static_cast<int>(k))->info().family);
  }
  CHECK(a[0].field.family != a[1].field.family);
  CHECK(a[1].field.family != a[2].field.family);
  CHECK_THROWS_AS(viscosity_screen(u, 1, 0), InvalidArgument);
}
