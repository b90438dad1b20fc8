#include "splinecop/archimedean.hpp"

#include <cmath>
#include <limits>

#include "splinecop/error.hpp"
#include "splinecop/quadrature.hpp"

namespace splinecop {

namespace {

void check_unit(double u, const char* what) {
  if (!(u > 0.0 && u < 1.0)) {
    throw Error(Errc::invalid_domain, std::string(what) + " must lie in (0,1)");
  }
}

constexpr double kFloor = 1e-300;

}  // namespace

double neg_log_sum_exp_neg(double a, double b) noexcept {
  const double lo = a < b ? a : b;
  const double diff = std::abs(a - b);
  return lo - std::log1p(std::exp(-diff));
}

double ArchimedeanGenerator::phi(double u) const { return std::exp(-psi(u)); }

double ArchimedeanGenerator::lambda_prime_fd(double u) const {
  const double h = lambda_fd_step(u);
  return (lambda(u + h) - lambda(u - h)) / (2.0 * h);
}

GeneratorValues ArchimedeanGenerator::evaluate(double u, LambdaDerivative mode) const {
  check_unit(u, "u");
  GeneratorValues out;
  const auto pl = psi_lambda(u);
  out.phi = std::exp(-pl.psi);
  out.lambda = pl.lambda;
  out.phi_prime = out.phi / out.lambda;
  out.lambda_prime =
      mode == LambdaDerivative::analytic ? lambda_prime(u) : lambda_prime_fd(u);
  return out;
}

double ArchimedeanGenerator::inverse(double x, double start) const {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(Errc::invalid_domain, "generator inverse needs a finite x > 0");
  }
  return inverse_psi(-std::log(x), start);
}

double ArchimedeanGenerator::copula_cdf(double u, double v) const {
  check_unit(u, "u");
  check_unit(v, "v");
  const double target = neg_log_sum_exp_neg(psi(u), psi(v));
  return inverse_psi(target, u * v);
}

double ArchimedeanGenerator::conditional_cdf(double u, double v) const {
  check_unit(u, "u");
  check_unit(v, "v");
  const auto pu = psi_lambda(u);
  const double pv = psi(v);
  const double target = neg_log_sum_exp_neg(pu.psi, pv);
  const double c = inverse_psi(target, u * v);
  // phi'(u)/phi'(C) with phi' = phi/lambda.
  const double lc = lambda(c);
  const double log_ratio = (-pu.psi - std::log(-pu.lambda)) - (-target - std::log(-lc));
  return std::exp(log_ratio);
}

double ArchimedeanGenerator::kendall_tau() const {
  return kendall_tau_from_lambda([this](double u) { return lambda(u); });
}

DensityTerm log_copula_density(const ArchimedeanGenerator& gen, double u, double v,
                               LambdaDerivative mode) {
  const auto pu = gen.psi_lambda(u);
  const auto pv = gen.psi_lambda(v);
  const double target = neg_log_sum_exp_neg(pu.psi, pv.psi);
  DensityTerm out;
  out.copula = gen.inverse_psi(target, u * v);
  const double lc = gen.lambda(out.copula);
  const double dlc = mode == LambdaDerivative::analytic ? gen.lambda_prime(out.copula)
                                                        : gen.lambda_prime_fd(out.copula);
  double one_minus = 1.0 - dlc;
  if (!(one_minus > 0.0)) {
    one_minus = kFloor;
    out.floored = true;
  }
  if (!(lc < 0.0) || !(pu.lambda < 0.0) || !(pv.lambda < 0.0)) {
    throw Error(Errc::density_nonpositive, "lambda must be negative on (0,1)");
  }
  // log phi = -psi; log(phi(u)+phi(v)) = -target.
  out.log_density = std::log(one_minus) + std::log(-lc) - std::log(-pu.lambda) -
                    std::log(-pv.lambda) - pu.psi - pv.psi + 2.0 * target;
  return out;
}

}  // namespace splinecop
