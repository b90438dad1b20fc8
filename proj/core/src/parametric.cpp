#include "splinecop/parametric.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "splinecop/error.hpp"
#include "splinecop/rng.hpp"

namespace splinecop {

namespace {

double log_u(double u) { return u > 0.5 ? std::log1p(u - 1.0) : std::log(u); }

void check_theta(Family family, double theta) {
  if (!std::isfinite(theta)) throw Error(Errc::out_of_range, "theta must be finite");
  switch (family) {
    case Family::clayton:
      if (theta < -1.0 || theta == 0.0) {
        throw Error(Errc::out_of_range, "Clayton theta must lie in [-1, inf) \\ {0}");
      }
      break;
    case Family::frank:
      if (theta == 0.0) throw Error(Errc::out_of_range, "Frank theta must be nonzero");
      break;
    case Family::gumbel:
      if (theta < 1.0) throw Error(Errc::out_of_range, "Gumbel theta must be >= 1");
      break;
  }
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::clayton: return "clayton";
    case Family::frank: return "frank";
    case Family::gumbel: return "gumbel";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "clayton" || name == "Clayton") return Family::clayton;
  if (name == "frank" || name == "Frank") return Family::frank;
  if (name == "gumbel" || name == "Gumbel") return Family::gumbel;
  throw Error(Errc::malformed_config, "unknown copula family '" + std::string(name) + "'");
}

ParametricGenerator::ParametricGenerator(Family family, double theta)
    : family_(family), theta_(theta) {
  check_theta(family, theta);
}

ParametricGenerator make_reference(Family family, double theta) {
  return ParametricGenerator(family, theta);
}

double ParametricGenerator::phi_closed(double u) const {
  const double t = theta_;
  switch (family_) {
    case Family::clayton:
      return std::expm1(-t * log_u(u)) / t;
    case Family::frank: {
      // -log((e^{-tu}-1)/(e^{-t}-1)); the ratio vanishes as u -> 0 and
      // tends to 1 as u -> 1, so each end gets its own form.
      if (u < 0.5) return -std::log(std::expm1(-t * u) / std::expm1(-t));
      const double r = -std::exp(-t * u) * std::expm1(-t * (1.0 - u)) / std::expm1(-t);
      return -std::log1p(r);
    }
    case Family::gumbel:
      return std::pow(-log_u(u), t);
  }
  return 0.0;
}

double ParametricGenerator::phi_prime_closed(double u) const {
  const double t = theta_;
  switch (family_) {
    case Family::clayton:
      return -std::pow(u, -t - 1.0);
    case Family::frank:
      return t * std::exp(-t * u) / std::expm1(-t * u);
    case Family::gumbel:
      return -t * std::pow(-log_u(u), t - 1.0) / u;
  }
  return 0.0;
}

double ParametricGenerator::inverse_closed(double x) const {
  const double t = theta_;
  switch (family_) {
    case Family::clayton:
      return std::exp(-std::log1p(t * x) / t);
    case Family::frank:
      return -std::log1p(std::exp(-x) * std::expm1(-t)) / t;
    case Family::gumbel:
      return std::exp(-std::pow(x, 1.0 / t));
  }
  return 0.0;
}

double ParametricGenerator::psi(double u) const {
  if (family_ == Family::gumbel) return -theta_ * std::log(-log_u(u));
  return -std::log(phi_closed(u));
}

double ParametricGenerator::lambda(double u) const {
  const double t = theta_;
  switch (family_) {
    case Family::clayton:
      return u * std::expm1(t * log_u(u)) / t;
    case Family::frank:
      return -phi_closed(u) * std::expm1(t * u) / t;
    case Family::gumbel:
      return u * log_u(u) / t;
  }
  return 0.0;
}

double ParametricGenerator::lambda_prime(double u) const {
  const double t = theta_;
  switch (family_) {
    case Family::clayton:
      return std::expm1(t * log_u(u)) / t + std::pow(u, t);
    case Family::frank:
      return 1.0 - phi_closed(u) * std::exp(t * u);
    case Family::gumbel:
      return (log_u(u) + 1.0) / t;
  }
  return 0.0;
}

double ParametricGenerator::inverse_psi(double target, double /*start*/) const {
  if (family_ == Family::gumbel) return std::exp(-std::exp(-target / theta_));
  return inverse_closed(std::exp(-target));
}

double debye_integral(double theta) {
  if (theta == 0.0) return 0.0;
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  using boost::math::quadrature::gauss_kronrod;
  if (theta > 0.0) return gauss_kronrod<double, 31>::integrate(f, 0.0, theta, 20, 1e-14);
  return -gauss_kronrod<double, 31>::integrate(f, theta, 0.0, 20, 1e-14);
}

double tau_of_theta(Family family, double theta) {
  check_theta(family, theta);
  switch (family) {
    case Family::clayton:
      return theta / (theta + 2.0);
    case Family::gumbel:
      return (theta - 1.0) / theta;
    case Family::frank: {
      if (std::abs(theta) < 1e-4) {
        return theta / 9.0 - theta * theta * theta / 900.0;
      }
      return 1.0 - 4.0 / theta * (1.0 - debye_integral(theta) / theta);
    }
  }
  return 0.0;
}

double theta_of_tau(Family family, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(Errc::out_of_range, "theta_of_tau needs tau in (0,1)");
  }
  switch (family) {
    case Family::clayton:
      return 2.0 * tau / (1.0 - tau);
    case Family::gumbel:
      return 1.0 / (1.0 - tau);
    case Family::frank: {
      auto f = [tau](double th) { return tau_of_theta(Family::frank, th) - tau; };
      double lo = 1e-8;
      double hi = 1.0;
      while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e5) throw Error(Errc::no_root, "Frank theta bracket exhausted");
      }
      std::uintmax_t iters = 200;
      auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * (1.0 + std::abs(a)); };
      const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
      const double root = 0.5 * (r.first + r.second);
      if (std::abs(f(root)) > 1e-10) {
        throw Error(Errc::no_root, "Frank theta_of_tau did not reach |f| <= 1e-10");
      }
      return root;
    }
  }
  return 0.0;
}

double tau_theta_map(Family family, TauDirection direction, double value) {
  return direction == TauDirection::tau_of_theta ? tau_of_theta(family, value)
                                                 : theta_of_tau(family, value);
}

double TauFunction::operator()(double x) const {
  if (kind == Kind::constant) return tau0;
  return 0.5 + 0.3 * std::sin(1.6 * std::numbers::pi * std::pow(x, 1.5));
}

double sample_conditional(const ArchimedeanGenerator& gen, double u, double w) {
  auto f = [&](double v) { return gen.conditional_cdf(u, v) - w; };
  double a = 1e-15;
  double b = 1.0 - 1e-15;
  const double fa = f(a);
  const double fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) {
    throw Error(Errc::no_root, "conditional cdf is not finite at the bracket ends");
  }
  if (fa >= 0.0) return a;
  if (fb <= 0.0) return b;
  std::uintmax_t iters = 200;
  auto tol = [](double lo, double hi) { return hi - lo <= 1e-12; };
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

ObservationSet sample_data(Family family, const TauFunction& tau, int n, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::invalid_domain, "sample size must be >= 1");
  ObservationSet data;
  data.u.resize(n);
  data.v.resize(n);
  const bool covariate = tau.needs_covariate();
  if (covariate) {
    data.x.resize(n, 1);
    data.covariate_names = {"x"};
    data.covariate_maps = {AffineMap{}};
  } else if (!(tau.tau0 >= 0.0 && tau.tau0 < 1.0)) {
    throw Error(Errc::out_of_range, "sampling supports constant tau in [0,1) only");
  }
  Rng rng(seed);
  std::optional<ParametricGenerator> fixed;
  if (!covariate && tau.tau0 > 0.0) fixed.emplace(family, theta_of_tau(family, tau.tau0));
  for (int i = 0; i < n; ++i) {
    double x = 0.0;
    if (covariate) {
      x = uniform_open(rng);
      data.x(i, 0) = x;
    }
    const double u = uniform_open(rng);
    const double w = uniform_open(rng);
    data.u[i] = u;
    if (covariate) {
      const ParametricGenerator gen(family, theta_of_tau(family, tau(x)));
      data.v[i] = sample_conditional(gen, u, w);
    } else if (fixed) {
      data.v[i] = sample_conditional(*fixed, u, w);
    } else {
      data.v[i] = w;  // independence
    }
  }
  return data;
}

double empirical_kendall_tau(const std::vector<double>& u, const std::vector<double>& v) {
  const std::size_t n = u.size();
  if (n < 2 || v.size() != n) throw Error(Errc::dimension_mismatch, "kendall tau needs n >= 2 pairs");
  long long score = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = (u[i] - u[j]) * (v[i] - v[j]);
      score += (a > 0.0) - (a < 0.0);
    }
  }
  return 2.0 * static_cast<double>(score) / (static_cast<double>(n) * (n - 1));
}

}  // namespace splinecop
