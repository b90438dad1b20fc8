#pragma once

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

namespace splinecop {

// Kendall's tau from a lambda function: 1 + 4 * int_0^1 lambda(u) du with a
// fixed 128-point Gauss-Legendre rule on (delta, 1 - delta). The substitution
// u = t^2 removes the u log u endpoint behaviour at 0.
template <class Lambda>
double kendall_tau_from_lambda(Lambda&& lambda, double delta = 1e-9) {
  using Rule = boost::math::quadrature::gauss<double, 128>;
  const double a = std::sqrt(delta);
  const double b = std::sqrt(1.0 - delta);
  const double integral = Rule::integrate([&](double t) { return 2.0 * t * lambda(t * t); }, a, b);
  return 1.0 + 4.0 * integral;
}

}  // namespace splinecop
