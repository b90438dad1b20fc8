#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "splinecop/rng.hpp"

namespace testsupport {

// Small hand-rolled generators for property tests.
struct Gen {
  splinecop::Rng rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * splinecop::uniform_open(rng);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double normal() {
    // Box-Muller keeps the tests independent of library distributions.
    const double a = splinecop::uniform_open(rng);
    const double b = splinecop::uniform_open(rng);
    return std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * M_PI * b);
  }
  std::vector<double> vector(int n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
};

// Double-exponential quadrature, used as an oracle independent of the
// library's fixed Gauss-Legendre rule. Copes with endpoint singularities
// such as t log t and with infinite ranges.
template <class F>
double adaptive_integral(F&& f, double a, double b, double tol = 1e-13) {
  if (std::isinf(a) || std::isinf(b)) {
    boost::math::quadrature::exp_sinh<double> es;
    boost::math::quadrature::sinh_sinh<double> ss;
    if (std::isinf(a) && std::isinf(b)) return ss.integrate(f, tol);
    if (std::isinf(b)) return es.integrate(f, a, b, tol);
    return es.integrate(f, a, b, tol);
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, tol);
}

// Fixed 20-point Gauss-Legendre on [a, b]; exact for polynomials up to degree 39.
template <class F>
double gauss_integral(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testsupport
