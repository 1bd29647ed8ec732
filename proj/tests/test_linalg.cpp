#include <cmath>

#include "doctest.h"
#include "msl/errors.hpp"
#include "msl/linalg.hpp"
#include "msl/rng.hpp"

using namespace msl;

namespace {

SymMatrix random_sym(CounterRng& rng, int k) {
  SymMatrix s(k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) s.set(i, j, rng.uniform(-2, 2));
  return s;
}

}  // namespace

TEST_CASE("determinant and solve on a known system") {
  const Matrix a(3, 3, {4, 1, 0, 1, 3, 1, 0, 1, 2});
  CHECK(determinant(a) == doctest::Approx(18.0).epsilon(1e-14));
  const Vec x = solve(a, Vec{1, 2, 3});
  const Vec back = a * std::span<const double>(x);
  for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(i + 1.0).epsilon(1e-13));
}

TEST_CASE("singular systems are rejected") {
  const Matrix a(2, 2, {1, 2, 2, 4});
  CHECK(determinant(a) == 0.0);
  CHECK_THROWS_AS(solve(a, Vec{1, 1}), DegenerateSample);
}

TEST_CASE("jacobi eigen reconstructs random symmetric matrices") {
  CounterRng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 11;
    const SymMatrix s = random_sym(rng, k);
    const EigenSystem es = jacobi_eigen(s);
    for (int j = 1; j < k; ++j) CHECK(es.values[j - 1] <= es.values[j]);
    const Matrix rec = es.vectors * Matrix::diagonal(es.values) * es.vectors.transpose();
    CHECK((rec - s.matrix()).max_abs() < 1e-11);
    const Matrix orth = es.vectors.transpose() * es.vectors - Matrix::identity(k);
    CHECK(orth.max_abs() < 1e-12);
  }
}

TEST_CASE("sym matrix storage is exactly symmetric") {
  const SymMatrix s(Matrix(2, 2, {1.0, 2.0, 3.0, 4.0}));
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 2.5);
}

TEST_CASE("least squares agrees with normal equations") {
  CounterRng rng(3);
  Matrix a(30, 4);
  Vec b(30);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 4; ++c) a(r, c) = rng.uniform(-1, 1);
    b[r] = rng.uniform(-1, 1);
  }
  const Vec x = least_squares(a, b);
  const Matrix ata = a.transpose() * a;
  const Vec atb = a.transpose() * std::span<const double>(b);
  const Vec y = solve(ata, atb);
  for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-10));
}

TEST_CASE("least squares flags rank deficiency") {
  Matrix a(5, 2);
  for (int r = 0; r < 5; ++r) {
    a(r, 0) = r;
    a(r, 1) = 2.0 * r;
  }
  CHECK_THROWS_AS(least_squares(a, Vec(5, 1.0)), DegenerateSample);
}

TEST_CASE("counter rng streams are reproducible and distinct") {
  CounterRng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
}
