#include <doctest.h>

#include <cmath>

#include "wmp/errors.hpp"
#include "wmp/linalg.hpp"
#include "wmp/rng.hpp"

using namespace wmp;

TEST_CASE("jacobi recovers a known 2x2 spectrum") {
  Mat A(2, 2);
  A(0, 0) = 0.8;
  A(0, 1) = A(1, 0) = 0.2;
  A(1, 1) = 0.8;
  const EigenSym e = jacobi_sym(A);
  CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.values[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("jacobi eigenpairs satisfy A v = lambda v on random symmetric matrices") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.next_below(6);
    Mat A(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double v = 2.0 * rng.next_double() - 1.0;
        A(i, j) = v;
        A(j, i) = v;
      }
    const EigenSym e = jacobi_sym(A);
    for (std::size_t c = 0; c < n; ++c) {
      Vec x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = e.vectors(i, c);
      const Vec Ax = mat_vec(A, x);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(Ax[i] == doctest::Approx(e.values[c] * x[i]).epsilon(1e-9).scale(1.0));
    }
    for (std::size_t c = 1; c < n; ++c) CHECK(e.values[c - 1] >= e.values[c]);
  }
}

TEST_CASE("jacobi matches the quadratic formula on random symmetric 2x2") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = rng.next_double(), b = rng.next_double() - 0.5, d = rng.next_double();
    Mat A(2, 2);
    A(0, 0) = a;
    A(0, 1) = A(1, 0) = b;
    A(1, 1) = d;
    const EigenSym e = jacobi_sym(A);
    const auto ev = eigvals_2x2(a, b, b, d);  // ordered by |.|
    const double hi = std::max(ev[0], ev[1]), lo = std::min(ev[0], ev[1]);
    CHECK(e.values[0] == doctest::Approx(hi).epsilon(1e-11).scale(1.0));
    CHECK(e.values[1] == doctest::Approx(lo).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("eigvals_2x2 rejects complex pairs") {
  CHECK_THROWS_AS(eigvals_2x2(0.0, 1.0, -1.0, 0.0), ComplexSpectrum);
}

TEST_CASE("power iteration with deflation finds the second direction") {
  Mat A(3, 3);
  // eigenvalues 3 (dir [1,1,1]/sqrt3), 1 and -2 on the complement
  const double vals[3] = {3.0, 1.0, -2.0};
  Vec basis[3] = {{1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)},
                  {1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0.0},
                  {1 / std::sqrt(6.0), 1 / std::sqrt(6.0), -2 / std::sqrt(6.0)}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int s = 0; s < 3; ++s) A(i, j) += vals[s] * basis[s][i] * basis[s][j];
  auto [rho, v] = power_iteration(A, {basis[0]});
  CHECK(rho == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(std::fabs(dot(v, basis[2])) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solve_linear and stationary distribution") {
  Mat K(2, 2);
  K(0, 0) = 0.9;
  K(0, 1) = 0.1;
  K(1, 0) = 0.3;
  K(1, 1) = 0.7;
  const Vec pi = stationary_distribution(K);
  // detailed balance solution 0.3/(0.1+0.3), 0.1/(0.1+0.3)
  CHECK(pi[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("poisson table moments") {
  Rng rng(99);
  PoissonTable tab(3.0);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = tab.sample(rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.02));
  CHECK(var == doctest::Approx(3.0).epsilon(0.05));
}
