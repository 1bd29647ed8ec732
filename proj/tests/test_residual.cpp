#include <cmath>

#include "doctest.h"
#include "msl/errors.hpp"
#include "msl/rng.hpp"
#include "msl/residual.hpp"
#include "msl/solver.hpp"

using namespace msl;

namespace {

std::size_t node_at(const GridMap& u, std::span<const double> x) {
  std::size_t idx = 0;
  for (int i = 0; i < u.dims().n; ++i)
    idx += static_cast<std::size_t>(std::lround((x[i] + 1.0) / u.h())) * u.stride(i);
  return idx;
}

// Max over the coarse-lattice points with |x| <= 0.5 of |R_div - R_nondiv|.
double form_gap(int N, const std::function<void(std::span<const double>, std::span<double>)>& f) {
  GridMap u(Dims{2, 2}, N);
  u.fill(f);
  double worst = 0.0;
  for (double x0 = -0.5; x0 <= 0.5 + 1e-12; x0 += 0.1)
    for (double x1 = -0.5; x1 <= 0.5 + 1e-12; x1 += 0.1) {
      const Vec x{x0, x1};
      if (dot(x, x) > 0.25 + 1e-12) continue;
      const std::size_t idx = node_at(u, x);
      const Vec a = residual_nondivergence(u, idx);
      const Vec b = residual_divergence(u, idx);
      worst = std::max(worst, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
  return worst;
}

}  // namespace

TEST_CASE("residuals vanish on affine maps") {
  for (int n = 2; n <= 4; ++n) {
    const Dims d{n, std::min(3, 7 - n)};
    GridMap u(d, n == 4 ? 11 : 21);
    u.fill([&](std::span<const double> x, std::span<double> out) {
      for (int a = 0; a < d.m; ++a) {
        out[a] = 0.3 - 0.2 * a;
        for (int i = 0; i < n; ++i) out[a] += (0.5 * (i + 1) - 0.7 * a) * x[i];
      }
    });
    const auto& nodes = u.unit_region().interior;
    CHECK(sup_residual(u, nodes, ResidualForm::NonDivergence) <= 1e-12);
    CHECK(sup_residual(u, nodes, ResidualForm::Divergence) <= 1e-12);
  }
}

TEST_CASE("flat tangent plane reduces the system to the Laplacian") {
  GridMap u(Dims{3, 2}, 21);
  // Du(0) = 0; components are harmonic / non-harmonic quadratics.
  u.fill([](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0] - x[1] * x[1] + 0.5 * x[1] * x[2];
    out[1] = x[0] * x[0] + 2.0 * x[2] * x[2];
  });
  const Vec origin{0.0, 0.0, 0.0};
  const Vec r = residual_nondivergence(u, node_at(u, origin));
  CHECK(std::abs(r[0]) <= 1e-10);
  CHECK(r[1] == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("residual stencils refuse mask boundary nodes") {
  GridMap u(Dims{2, 1}, 21);
  const std::size_t b = u.unit_region().boundary.front();
  CHECK_THROWS_AS(residual_nondivergence(u, b), BoundaryProximity);
  CHECK_THROWS_AS(residual_divergence(u, b), BoundaryProximity);
  CHECK_THROWS_AS(residual_nondivergence(u, 0), BoundaryProximity);  // corner, outside the ball
}

TEST_CASE("scalar case matches the classical minimal surface operator") {
  GridMap u(Dims{2, 1}, 41);
  u.fill([](std::span<const double> x, std::span<double> out) {
    out[0] = std::sin(2.0 * x[0]) * x[1] + 0.3 * x[0] * x[0];
  });
  const double h = u.h();
  for (std::size_t idx : u.unit_region().interior) {
    const std::size_t e0 = u.stride(0), e1 = u.stride(1);
    const double ux = (u.value(idx + e0, 0) - u.value(idx - e0, 0)) / (2 * h);
    const double uy = (u.value(idx + e1, 0) - u.value(idx - e1, 0)) / (2 * h);
    const double uxx = (u.value(idx + e0, 0) - 2 * u.value(idx, 0) + u.value(idx - e0, 0)) / (h * h);
    const double uyy = (u.value(idx + e1, 0) - 2 * u.value(idx, 0) + u.value(idx - e1, 0)) / (h * h);
    const double uxy = (u.value(idx + e0 + e1, 0) - u.value(idx + e0 - e1, 0) - u.value(idx - e0 + e1, 0) +
                        u.value(idx - e0 - e1, 0)) /
                       (4 * h * h);
    const double w = 1.0 + ux * ux + uy * uy;
    const double classical = w * (uxx + uyy) - (ux * ux * uxx + 2 * ux * uy * uxy + uy * uy * uyy);
    const double r = residual_nondivergence(u, idx)[0];
    CHECK(r * std::pow(w, 1.5) == doctest::Approx(classical).epsilon(1e-10).scale(1.0));
    if (std::abs(classical) > 1e-8) CHECK((r > 0) == (classical > 0));
  }
}

TEST_CASE("divergence and non-divergence forms agree to second order") {
  auto f = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0] + x[1] * x[1];
    out[1] = std::sin(x[0]) * std::cos(1.5 * x[1]);
  };
  const double g1 = form_gap(21, f), g2 = form_gap(41, f), g3 = form_gap(81, f);
  const double p1 = std::log2(g1 / g2), p2 = std::log2(g2 / g3);
  MESSAGE("form gaps " << g1 << " " << g2 << " " << g3 << " orders " << p1 << " " << p2);
  CHECK(p1 >= 1.8);
  CHECK(p2 >= 1.8);
}

TEST_CASE("Lawson-Osserman residual converges at second order on the annulus") {
  auto sup_on_annulus = [](int N) {
    GridMap u(Dims{4, 3}, N);
    u.fill([](std::span<const double> x, std::span<double> out) {
      const Vec v = lawson_osserman(x);
      std::copy(v.begin(), v.end(), out.begin());
    });
    std::vector<std::size_t> nodes;
    for (std::size_t idx : u.unit_region().interior) {
      const Vec x = u.coords(idx);
      const double r = norm(x);
      if (r >= 0.5 - 1e-12) nodes.push_back(idx);
    }
    return sup_residual(u, nodes);
  };
  const double coarse = sup_on_annulus(21), fine = sup_on_annulus(41);
  const double order = std::log2(coarse / fine);
  MESSAGE("LO residual " << coarse << " -> " << fine << ", order " << order);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("discrete area of a flat disk approximates its measure") {
  GridMap u(Dims{2, 1}, 81);
  CHECK(discrete_area(u) == doctest::Approx(M_PI).epsilon(0.1));
}

TEST_CASE("residual kernel equals the contraction of the area hessian with central differences") {
  CounterRng rng(31);
  for (Dims d : {Dims{2, 1}, Dims{2, 3}, Dims{3, 2}, Dims{4, 3}}) {
    GridMap u(d, d.n == 4 ? 11 : 15);
    std::vector<double> c(d.m * 6);
    for (double& v : c) v = rng.uniform(-1, 1);
    u.fill([&](std::span<const double> x, std::span<double> out) {
      for (int a = 0; a < d.m; ++a) {
        const double* k = c.data() + 6 * a;
        out[a] = k[0] * x[0] + k[1] * x[1] * x[1] + k[2] * std::sin(2 * x[0] + x[d.n - 1]) + k[3] * x[0] * x[1] +
                 k[4] * std::exp(0.5 * x[d.n - 1]) + k[5] * x[1];
      }
    });
    const double h = u.h();
    for (std::size_t idx : u.unit_region().interior) {
      const Gradient A = central_gradient(u, idx);
      const AreaHessian T = area_hessian(A);
      Vec expect(d.m, 0.0);
      for (int a = 0; a < d.m; ++a)
        for (int i = 0; i < d.n; ++i)
          for (int b = 0; b < d.m; ++b)
            for (int j = 0; j < d.n; ++j) {
              const std::ptrdiff_t si = u.stride(i), sj = u.stride(j);
              double uij;
              if (i == j)
                uij = (u.value(idx + si, b) - 2 * u.value(idx, b) + u.value(idx - si, b)) / (h * h);
              else
                uij = (u.value(idx + si + sj, b) - u.value(idx + si - sj, b) - u.value(idx - si + sj, b) +
                       u.value(idx - si - sj, b)) /
                      (4 * h * h);
              expect[a] += T(a, i, b, j) * uij;
            }
      const Vec got = residual_nondivergence(u, idx);
      for (int a = 0; a < d.m; ++a) CHECK(got[a] == doctest::Approx(expect[a]).epsilon(1e-10).scale(1.0));
      CHECK(coefficient_max_eigenvalue(u, idx) ==
            doctest::Approx(eigenvalues(T.flat()).back()).epsilon(1e-9));
    }
  }
}
