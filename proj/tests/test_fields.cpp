#include <cmath>

#include "doctest.h"
#include "msl/certify.hpp"
#include "msl/errors.hpp"
#include "msl/interp.hpp"
#include "oracles.hpp"

using namespace msl;

namespace {

Dims random_dims(CounterRng& rng) {
  while (true) {
    const Dims d{2 + static_cast<int>(rng.uniform() * 3), 1 + static_cast<int>(rng.uniform() * 3)};
    if (d.n + d.m <= 7) return d;
  }
}

Vec random_x(CounterRng& rng, int n, double radius) {
  while (true) {
    Vec x(n);
    for (double& v : x) v = rng.uniform(-radius, radius);
    if (norm(x) <= radius) return x;
  }
}

Vec random_unit(CounterRng& rng, int k) {
  Vec v(k);
  for (double& c : v) c = rng.normal();
  const double s = norm(v);
  for (double& c : v) c /= s;
  return v;
}

AffineMap random_affine(CounterRng& rng, const Dims& d, double slope) {
  AffineMap l = AffineMap::zero(d);
  for (double& b : l.b) b = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < d.n; ++i)
    for (int a = 0; a < d.m; ++a) l.A(i, a) = rng.uniform(-1, 1);
  const double s = l.slope_norm();
  if (s > 0) l.A *= slope / s;
  return l;
}

QuadraticMap random_harmonic(CounterRng& rng, const Dims& d, double scale) {
  QuadraticMap q = QuadraticMap::from_affine(random_affine(rng, d, rng.uniform(0, 1)));
  for (int a = 0; a < d.m; ++a) {
    Matrix Q(d.n, d.n);
    for (int i = 0; i < d.n; ++i)
      for (int j = i; j < d.n; ++j) Q(i, j) = Q(j, i) = scale * rng.uniform(-1, 1);
    double tr = 0.0;
    for (int i = 0; i < d.n; ++i) tr += Q(i, i);
    for (int i = 0; i < d.n; ++i) Q(i, i) -= tr / d.n;
    q.Q[a] = SymMatrix(Q);
  }
  return q;
}

// Point at offset radius rho from the graph of q over x.
Vec tube_point(const QuadraticMap& q, const Vec& x, const Vec& dir, double rho) {
  Vec X = x;
  const Vec qx = q(x);
  for (std::size_t a = 0; a < qx.size(); ++a) X.push_back(qx[a] + rho * dir[a]);
  return X;
}

struct Agreement {
  double grad = 0.0;
  double hess = 0.0;
};

Agreement compare_fd(const ScalarField& H, const Vec& X, double scale) {
  auto f = [&](const Vec& Y) { return H.value(Y); };
  const Vec g = H.gradient(X);
  const Vec gf = oracle::fd_gradient(f, X, 1e-6 * scale);
  Vec diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - gf[i];
  const Matrix Hs = H.hessian(X).matrix();
  const Matrix Hf = oracle::fd_hessian(f, X, 4e-3 * scale);
  return {norm(diff) / std::max(1.0, norm(g)), (Hs - Hf).frobenius() / std::max(1.0, Hs.frobenius())};
}

GridMap smooth_grid(const Dims& d, int N) {
  GridMap g(d, N);
  g.fill([&](std::span<const double> x, std::span<double> out) {
    for (int a = 0; a < d.m; ++a) {
      out[a] = 0.2 * a;
      for (int i = 0; i < d.n; ++i) out[a] += 0.3 * std::sin(1.0 + a + 1.7 * x[i]) * (i + 1) / d.n;
      out[a] += 0.25 * x[0] * x[1] - 0.1 * a * x[1] * x[1] * x[0];
    }
  });
  return g;
}

}  // namespace

TEST_CASE("built-in families: analytic derivatives match finite differences of the value") {
  CounterRng rng(1001);
  const auto grid_a = std::make_shared<GridInterpolant>(smooth_grid(Dims{2, 2}, 21));
  const auto grid_b = std::make_shared<GridInterpolant>(smooth_grid(Dims{3, 1}, 15));
  double worst_g = 0.0, worst_h = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int family = t % 5;
    FieldPtr H;
    Vec X;
    double scale = 1.0;
    if (family == 0 || family == 1) {
      const Dims d = random_dims(rng);
      const double eps = rng.uniform(0.1, 0.5);
      QuadraticMap q = family == 0 ? QuadraticMap::from_affine(random_affine(rng, d, rng.uniform(0, 1)))
                                   : random_harmonic(rng, d, 0.3);
      H = family == 0 ? family_l1(q.affine_part(), eps) : family_quadratic(q, eps, rng.uniform(0.55, 0.95));
      const double rho = rng.uniform(0.5, 1.0) * eps;
      X = tube_point(q, random_x(rng, d.n, 0.75), random_unit(rng, d.m), rho);
      scale = rho;
    } else if (family == 2) {
      const Dims d = random_dims(rng);
      const double eps = rng.uniform(0.1, 0.5);
      const auto h = std::make_shared<QuadraticFunction>(random_harmonic(rng, d, 0.5));
      const QuadraticMap q = random_harmonic(rng, d, 0.3);
      H = family_l35(h, q, eps, rng.uniform(0.1, 1.0));
      X = tube_point(q, random_x(rng, d.n, 0.75), random_unit(rng, d.m), rng.uniform(0, 1) * eps);
      scale = eps;
    } else if (family == 3) {
      const auto& gi = (t % 2) ? grid_a : grid_b;
      const Dims d{gi->n(), gi->m()};
      const double h = gi->grid().h();
      // Keep the stencil inside one interpolation cell.
      Vec x = random_x(rng, d.n, 0.45);
      for (double& v : x) v = -1.0 + h * (std::floor((v + 1.0) / h) + rng.uniform(0.3, 0.7));
      const double eps = rng.uniform(0.1, 0.5);
      const QuadraticMap q = QuadraticMap::from_affine(random_affine(rng, d, 0.5));
      H = family_l35(gi, q, eps, rng.uniform(0.1, 1.0));
      X = tube_point(q, x, random_unit(rng, d.m), rng.uniform(0, 1) * eps);
      scale = std::min(eps, h);
    } else {
      const Dims d = random_dims(rng);
      Vec X0(d.ambient());
      for (double& v : X0) v = rng.uniform(-1, 1);
      FieldPtr base = sphere_field(X0, t % 2 ? 1.0 : -1.0, d.n);
      H = moved_field(base, oracle::random_rotation(rng, d.ambient()), random_x(rng, d.ambient(), 0.5));
      X = random_x(rng, d.ambient(), 1.0);
    }
    const Agreement a = compare_fd(*H, X, scale);
    worst_g = std::max(worst_g, a.grad);
    worst_h = std::max(worst_h, a.hess);
    CHECK(a.grad <= 1e-6);
    CHECK(a.hess <= 1e-6);
  }
  MESSAGE("worst relative gradient error " << worst_g << ", hessian " << worst_h);
}

TEST_CASE("grid interpolant reproduces tensor cubics with derivatives") {
  const Dims d{3, 2};
  auto f = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0] * x[0] - 2 * x[0] * x[1] * x[2] + 0.5 * x[2] * x[2];
    out[1] = x[1] * x[1] * x[0] + x[2];
  };
  GridMap g(d, 21);
  g.fill(f);
  const GridInterpolant gi(g);
  CounterRng rng(1002);
  for (int t = 0; t < 200; ++t) {
    const Vec x = random_x(rng, 3, 0.55);
    Vec v(2), e(2);
    gi.eval(x, v);
    f(x, e);
    CHECK(std::abs(v[0] - e[0]) <= 1e-12);
    CHECK(std::abs(v[1] - e[1]) <= 1e-12);
    const Gradient J = gi.jacobian(x);
    CHECK(J(0, 0) == doctest::Approx(3 * x[0] * x[0] - 2 * x[1] * x[2]).epsilon(1e-10).scale(1));
    CHECK(J(2, 1) == doctest::Approx(1.0).epsilon(1e-10));
    const auto H = gi.hessians(x);
    CHECK(H[0](0, 0) == doctest::Approx(6 * x[0]).epsilon(1e-9).scale(1));
    CHECK(H[0](1, 2) == doctest::Approx(-2 * x[0]).epsilon(1e-9).scale(1));
    CHECK(H[1](0, 1) == doctest::Approx(2 * x[1]).epsilon(1e-9).scale(1));
    CHECK(H[0](2, 2) == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Cubics have vanishing fourth differences, so the recorded bound is zero.
  CHECK(gi.hessian_error() <= 1e-9);
  GridMap q(Dims{2, 1}, 21);
  q.fill([](std::span<const double> x, std::span<double> out) { out[0] = std::pow(x[0], 4); });
  CHECK(GridInterpolant(q).hessian_error() > 0.0);
  Vec out(2);
  CHECK_THROWS_AS(gi.eval(Vec{0.95, 0.0, 0.0}, out), BoundaryProximity);
}

TEST_CASE("is_comparison_at examples") {
  const FieldPtr S = sphere_field(Vec{0.1, 0.2, -0.3, 0.4}, 1.0, 2);
  CHECK(is_comparison_at(*S, Vec{0.5, 0.5, 0.5, 0.5}, 2) == doctest::Approx(4.0).epsilon(1e-12));
  const FieldPtr L = linear_field(Vec{1, 0, 0}, 2);
  CHECK(std::abs(is_comparison_at(*L, Vec{0.3, 0.1, 0.2}, 2)) <= 1e-15);
  // |z|^2 - |x|^2 at (0, 0, 1): hyperplane is x-space, Hessian -2 I_2.
  const FieldPtr sad = raw_field(
      Dims{2, 1}, "saddle-analytic", [](std::span<const double> X) { return X[2] * X[2] - X[0] * X[0] - X[1] * X[1]; },
      [](std::span<const double> X) { return Vec{-2 * X[0], -2 * X[1], 2 * X[2]}; },
      [](std::span<const double>) { return SymMatrix(Matrix::diagonal(Vec{-2, -2, 2})); });
  CHECK(is_comparison_at(*sad, Vec{0, 0, 1}, 2) == doctest::Approx(-4.0).epsilon(1e-14));
  const FieldPtr sad_fd = named_raw_field(Dims{2, 1}, "saddle");
  CHECK(sad_fd->tag() == FieldTag::FiniteDifference);
  CHECK(is_comparison_at(*sad_fd, Vec{0, 0, 1}, 2) == doctest::Approx(-4.0).epsilon(1e-5));
  CHECK_THROWS_AS(is_comparison_at(*S, Vec{0.1, 0.2, -0.3, 0.4}, 2), DegenerateGradient);

  CounterRng rng(1003);
  for (int t = 0; t < 20; ++t) {
    const double a = rng.uniform(0.2, 2.0);
    const FieldPtr H = raw_field(
        Dims{2, 1}, "saddle-a", [a](std::span<const double> X) { return X[2] * X[2] - a * (X[0] * X[0] + X[1] * X[1]); },
        [a](std::span<const double> X) { return Vec{-2 * a * X[0], -2 * a * X[1], 2 * X[2]}; },
        [a](std::span<const double>) { return SymMatrix(Matrix::diagonal(Vec{-2 * a, -2 * a, 2})); });
    const Vec X{0, 0, rng.uniform(0.5, 2.0)};
    const auto fs = oracle::frame_search(H->hessian(X), H->gradient(X), 2, 10000, rng);
    CHECK(is_comparison_at(*H, X, 2) == doctest::Approx(fs.polished_min).epsilon(1e-6));
    CHECK(is_comparison_at(*H, X, 2) <= fs.sampled_min + 1e-12);
  }
}

TEST_CASE("margins are invariant under rigid motions of the field") {
  CounterRng rng(1004);
  double worst = 0.0;
  for (int t = 0; t < 300; ++t) {
    const Dims d = random_dims(rng);
    FieldPtr H;
    Vec X;
    const double eps = rng.uniform(0.05, 0.3);
    const QuadraticMap q = random_harmonic(rng, d, 0.3);
    switch (t % 3) {
      case 0: H = family_l1(q.affine_part(), eps); break;
      case 1: H = family_quadratic(q, eps, 0.75); break;
      default: H = family_l35(std::make_shared<QuadraticFunction>(random_harmonic(rng, d, 0.3)), q, eps, 0.5);
    }
    X = tube_point(q, random_x(rng, d.n, 0.75), random_unit(rng, d.m), rng.uniform(0.2, 1.0) * eps);
    const Matrix R = oracle::random_rotation(rng, d.ambient());
    const Vec tr = random_x(rng, d.ambient(), 1.0);
    const FieldPtr M = moved_field(H, R, tr);
    Vec Y = R * std::span<const double>(X);
    for (int i = 0; i < d.ambient(); ++i) Y[i] += tr[i];
    const double a = is_comparison_at(*H, X, d.n), b = is_comparison_at(*M, Y, d.n);
    worst = std::max(worst, std::abs(a - b));
    CHECK(std::abs(a - b) <= 1e-8);
  }
  MESSAGE("worst rigid-motion margin change " << worst);
}

TEST_CASE("family_quadratic with q = 0 coincides with family_l1 with l = 0") {
  const Dims d{3, 2};
  const Profile phi = default_l1_profile(3);
  const FieldPtr a = family_l1(AffineMap::zero(d), 0.05, phi);
  const FieldPtr b = family_quadratic(QuadraticMap::zero(d), 0.05, 0.7, phi);
  CounterRng rng(1005);
  for (int t = 0; t < 100; ++t) {
    const Vec X = tube_point(QuadraticMap::zero(d), random_x(rng, 3, 0.75), random_unit(rng, 2), rng.uniform(0.01, 0.05));
    CHECK(a->value(X) == b->value(X));
    CHECK(a->gradient(X) == b->gradient(X));
    CHECK((a->hessian(X).matrix() - b->hessian(X).matrix()).max_abs() == 0.0);
    CHECK(a->excluded(X) == b->excluded(X));
  }
}

TEST_CASE("family argument validation") {
  const Dims d{2, 2};
  CHECK_THROWS_AS(family_l1(AffineMap::zero(d), 0.0), InvalidArgument);
  CHECK_THROWS_AS(family_l1(AffineMap::zero(d), -1.0), InvalidArgument);
  CHECK_THROWS_AS(family_quadratic(QuadraticMap::zero(d), 0.01, 0.5), InvalidArgument);
  CHECK_THROWS_AS(family_quadratic(QuadraticMap::zero(d), 0.01, 1.0), InvalidArgument);
  const auto h = std::make_shared<QuadraticFunction>(QuadraticMap::zero(d));
  CHECK_THROWS_AS(family_l35(h, QuadraticMap::zero(d), 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(family_l35(h, QuadraticMap::zero(d), 0.1, 0.0), InvalidArgument);
  CHECK_NOTHROW(family_l35_unchecked(h, QuadraticMap::zero(d), 0.1, 0.0));
  CHECK_THROWS_AS(named_raw_field(d, "nope"), InvalidArgument);
}

TEST_CASE("default profile is admissible") {
  CounterRng rng(1006);
  for (int n = 2; n <= 4; ++n) {
    std::vector<Vec> xs;
    for (int t = 0; t < 200; ++t) xs.push_back(random_x(rng, n, 1.0));
    const double c0 = default_c0(n, 1.0);
    CHECK(c0 == doctest::Approx(1.0 / (16.0 * n)));
    const ProfileCheck pc = check_profile(default_l1_profile(n), c0, xs);
    CHECK(pc.admissible);
    CHECK(pc.pucci_max == doctest::Approx(-c0 / 2).epsilon(1e-12));
    CHECK(pc.c11_norm <= 1.0);
    CHECK_FALSE(check_profile(paraboloid_profile(n, -0.1), c0, xs).admissible);
    CHECK_FALSE(check_profile(paraboloid_profile(n, 2.0), c0, xs).admissible);
  }
}
