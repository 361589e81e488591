/// @file quadrature.hpp
/// @brief Gauss rules on [0, 1] and collapsed (Duffy) rules on the reference triangle.

#pragma once

#include <stdexcept>
#include <vector>

#include "meevc/mesh.hpp"

namespace meevc {

class QuadratureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rule on the reference triangle {(0,0), (1,0), (0,1)}; weights sum to 1/2.
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Rule on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

inline constexpr int kMaxQuadratureDegree = 10;

/// Triangle rule exact for x^a y^b with a + b <= degree, 1 <= degree <= 10.
const QuadratureRule& quadrature_rule(int degree);

/// n-point Gauss-Legendre rule on [0, 1], exact up to degree 2n - 1.
const LineRule& gauss_legendre(int n);

}  // namespace meevc
