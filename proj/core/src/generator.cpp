#include "splinecop/generator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "splinecop/error.hpp"

namespace splinecop {

double transform_s_unchecked(double u) noexcept {
  const double lu = u > 0.5 ? std::log1p(u - 1.0) : std::log(u);
  return -std::log(-lu);
}

double transform_s(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(Errc::invalid_domain, "S(u) needs u in (0,1)");
  return transform_s_unchecked(u);
}

double transform_s_inverse(double s) noexcept { return std::exp(-std::exp(-s)); }

std::shared_ptr<const BSplineBasis> make_generator_basis(int size, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(Errc::invalid_domain, "epsilon must lie in (0, 0.5)");
  }
  return std::make_shared<const BSplineBasis>(transform_s(epsilon), transform_s(1.0 - epsilon),
                                              size);
}

GeneratorCoefficients GeneratorCoefficients::make(std::vector<double> theta, double epsilon) {
  GeneratorCoefficients gc;
  gc.basis = make_generator_basis(static_cast<int>(theta.size()), epsilon);
  gc.theta = std::move(theta);
  gc.epsilon = epsilon;
  return gc;
}

SplineGenerator::SplineGenerator(std::shared_ptr<const BSplineBasis> basis,
                                 std::span<const double> theta)
    : basis_(std::move(basis)) {
  set_coefficients(theta);
}

SplineGenerator::SplineGenerator(const GeneratorCoefficients& gc)
    : SplineGenerator(gc.basis, gc.theta) {}

void SplineGenerator::set_coefficients(std::span<const double> theta) {
  const int k = basis_->size();
  if (static_cast<int>(theta.size()) != k) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(k) +
                                              " coefficients, got " +
                                              std::to_string(theta.size()));
  }
  theta_.assign(theta.begin(), theta.end());
  weight_.resize(k);
  for (int i = 0; i < k; ++i) {
    if (!std::isfinite(theta[i])) throw Error(Errc::non_finite, "non-finite spline coefficient");
    weight_[i] = theta[i] * theta[i];
  }
  const int nint = basis_->intervals();
  prefix_.resize(nint);
  double acc = 0.0;
  for (int j = 0; j < nint; ++j) {
    prefix_[j] = acc;
    acc += weight_[j] * basis_->total_integral(j);
  }
  // Clamped basis: only b_0 is active at lo and only b_{K-1} at hi.
  slope_lo_ = 1.0 + weight_.front();
  slope_hi_ = 1.0 + weight_.back();
  double total = basis_->hi() - basis_->lo();
  for (int i = 0; i < k; ++i) total += weight_[i] * basis_->total_integral(i);
  g_hi_ = total;
}

SplineGenerator::GPair SplineGenerator::g_pair(double s) const {
  const double lo = basis_->lo();
  const double hi = basis_->hi();
  if (s <= lo) return {shift_ + slope_lo_ * (s - lo), slope_lo_};
  if (s >= hi) return {shift_ + g_hi_ + slope_hi_ * (s - hi), slope_hi_};
  const auto loc = basis_->local(s);
  double g = (s - lo) + prefix_[loc.first];
  double gp = 1.0;
  for (int a = 0; a < 4; ++a) {
    const double w = weight_[loc.first + a];
    g += w * loc.integral[a];
    gp += w * loc.value[a];
  }
  return {shift_ + g, gp};
}

double SplineGenerator::g(double s) const { return g_pair(s).g; }

double SplineGenerator::g_prime(double s) const {
  if (s <= basis_->lo()) return slope_lo_;
  if (s >= basis_->hi()) return slope_hi_;
  const auto loc = basis_->local_values(s);
  double gp = 1.0;
  for (int a = 0; a < 4; ++a) gp += weight_[loc.first + a] * loc.value[a];
  return gp;
}

double SplineGenerator::g_second(double s) const {
  if (s <= basis_->lo() || s >= basis_->hi()) return 0.0;
  const auto loc = basis_->local(s);
  double gs = 0.0;
  for (int a = 0; a < 4; ++a) gs += weight_[loc.first + a] * loc.derivative[a];
  return gs;
}

double SplineGenerator::psi(double u) const { return g(transform_s_unchecked(u)); }

double SplineGenerator::lambda(double u) const {
  const double lu = u > 0.5 ? std::log1p(u - 1.0) : std::log(u);
  return u * lu / g_prime(-std::log(-lu));
}

ArchimedeanGenerator::PsiLambda SplineGenerator::psi_lambda(double u) const {
  const double lu = u > 0.5 ? std::log1p(u - 1.0) : std::log(u);
  const auto gp = g_pair(-std::log(-lu));
  return {gp.g, u * lu / gp.g_prime};
}

// lambda(u) = u log u / g'(S(u)) and S'(u) = -1/(u log u), so
// lambda'(u) = (1 + log u) / g' + g'' / g'^2.
double SplineGenerator::lambda_prime(double u) const {
  const double lu = u > 0.5 ? std::log1p(u - 1.0) : std::log(u);
  const double s = -std::log(-lu);
  const double gp = g_prime(s);
  return (1.0 + lu) / gp + g_second(s) / (gp * gp);
}

InversionResult SplineGenerator::invert(double target, double start, double tol,
                                        int max_iter) const {
  if (!std::isfinite(target)) throw Error(Errc::non_finite, "inversion target is not finite");
  double s = (start > 0.0 && start < 1.0) ? transform_s_unchecked(start) : 0.0;
  InversionResult out;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const auto gp = g_pair(s);
    const double f = gp.g - target;
    out.residual = f;
    if (std::abs(f) <= tol) {
      // One polishing step; Newton is quadratic here so this takes the
      // residual to rounding level at negligible cost.
      s -= f / gp.g_prime;
      out.u = transform_s_inverse(s);
      out.iterations = it;
      return out;
    }
    // g is strictly increasing, so every evaluation tightens a bracket on
    // the root. Newton steps that leave the bracket fall back to bisection;
    // without this, strongly varying g' can make plain Newton cycle.
    if (f < 0.0) lo = s; else hi = s;
    double delta = -f / gp.g_prime;
    if (delta > 5.0) delta = 5.0;
    if (delta < -5.0) delta = -5.0;
    double next = s + delta;
    if (std::isfinite(lo) && std::isfinite(hi) && !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
    out.iterations = it + 1;
  }
  const double f = g(s) - target;
  if (std::abs(f) <= tol) {
    out.u = transform_s_inverse(s);
    out.residual = f;
    return out;
  }
  throw Error(Errc::no_convergence,
              "generator inversion stalled with residual " + std::to_string(f));
}

double SplineGenerator::inverse_psi(double target, double start) const {
  return invert(target, start).u;
}

double kendall_tau(const GeneratorCoefficients& gc) { return SplineGenerator(gc).kendall_tau(); }

}  // namespace splinecop
