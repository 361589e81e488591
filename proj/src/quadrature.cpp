#include "meevc/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace meevc {

namespace {

constexpr int kMaxLinePoints = 16;

LineRule make_gauss_legendre(int n) {
  LineRule rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  // Newton on P_n starting from the Chebyshev-like guess, then map [-1, 1] -> [0, 1].
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto idx = static_cast<std::size_t>(n - 1 - i);
    rule.points[idx] = 0.5 * (x + 1.0);
    rule.weights[idx] = 0.5 * w;
  }
  return rule;
}

QuadratureRule make_triangle_rule(int degree) {
  // Collapsed map (u, v) -> (u (1 - v), v) with Jacobian (1 - v); the pulled-back
  // integrand has degree <= degree in u and <= degree + 1 in v.
  const int n = (degree + 3) / 2;
  const LineRule& g = gauss_legendre(n);
  QuadratureRule rule;
  rule.degree = degree;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double u = g.points[static_cast<std::size_t>(i)];
      const double v = g.points[static_cast<std::size_t>(j)];
      rule.points.push_back({u * (1.0 - v), v});
      rule.weights.push_back(g.weights[static_cast<std::size_t>(i)] *
                             g.weights[static_cast<std::size_t>(j)] * (1.0 - v));
    }
  }
  return rule;
}

}  // namespace

const LineRule& gauss_legendre(int n) {
  static const std::array<LineRule, kMaxLinePoints + 1> rules = [] {
    std::array<LineRule, kMaxLinePoints + 1> r;
    for (int k = 1; k <= kMaxLinePoints; ++k) r[static_cast<std::size_t>(k)] = make_gauss_legendre(k);
    return r;
  }();
  if (n < 1 || n > kMaxLinePoints)
    throw QuadratureError("Gauss-Legendre rule with " + std::to_string(n) + " points not available");
  return rules[static_cast<std::size_t>(n)];
}

const QuadratureRule& quadrature_rule(int degree) {
  static const std::array<QuadratureRule, kMaxQuadratureDegree + 1> rules = [] {
    std::array<QuadratureRule, kMaxQuadratureDegree + 1> r;
    for (int d = 1; d <= kMaxQuadratureDegree; ++d) r[static_cast<std::size_t>(d)] = make_triangle_rule(d);
    return r;
  }();
  if (degree < 1 || degree > kMaxQuadratureDegree)
    throw QuadratureError("triangle quadrature of degree " + std::to_string(degree) +
                          " not supported (1..10)");
  return rules[static_cast<std::size_t>(degree)];
}

}  // namespace meevc
