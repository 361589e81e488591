#include <doctest.h>

#include <cmath>

#include "meevc/quadrature.hpp"

using namespace meevc;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// int_T x^a y^b over the reference triangle
double monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

}  // namespace

TEST_CASE("triangle rules integrate monomials up to their degree exactly") {
  for (int d = 1; d <= kMaxQuadratureDegree; ++d) {
    const QuadratureRule& q = quadrature_rule(d);
    CHECK(q.degree >= d);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i)
          s += q.weights[i] * std::pow(q.points[i].x, a) * std::pow(q.points[i].y, b);
        CHECK(s == doctest::Approx(monomial_integral(a, b)).epsilon(1e-13));
      }
  }
}

TEST_CASE("triangle rule points lie inside the reference triangle with positive weights") {
  for (int d = 1; d <= kMaxQuadratureDegree; ++d) {
    const QuadratureRule& q = quadrature_rule(d);
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(q.weights[i] > 0.0);
      CHECK(q.points[i].x >= 0.0);
      CHECK(q.points[i].y >= 0.0);
      CHECK(q.points[i].x + q.points[i].y <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("Gauss-Legendre on [0,1] is exact to degree 2n-1") {
  for (int n = 1; n <= 16; ++n) {
    const LineRule& r = gauss_legendre(n);
    REQUIRE(r.points.size() == static_cast<std::size_t>(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], p);
      CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("out-of-range orders are rejected") {
  CHECK_THROWS_AS(quadrature_rule(0), QuadratureError);
  CHECK_THROWS_AS(quadrature_rule(kMaxQuadratureDegree + 1), QuadratureError);
  CHECK_THROWS_AS(gauss_legendre(0), QuadratureError);
  CHECK_THROWS_AS(gauss_legendre(17), QuadratureError);
}
