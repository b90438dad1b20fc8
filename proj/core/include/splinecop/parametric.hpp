#pragma once

#include <cstdint>
#include <string_view>

#include "splinecop/archimedean.hpp"
#include "splinecop/observations.hpp"

namespace splinecop {

enum class Family { clayton, frank, gumbel };

std::string_view to_string(Family f) noexcept;
Family parse_family(std::string_view name);

// Clayton, Frank and Gumbel generators in closed form.
class ParametricGenerator final : public ArchimedeanGenerator {
 public:
  ParametricGenerator(Family family, double theta);

  Family family() const noexcept { return family_; }
  double theta() const noexcept { return theta_; }

  double phi_closed(double u) const;
  double phi_prime_closed(double u) const;
  double inverse_closed(double x) const;

  double psi(double u) const override;
  double lambda(double u) const override;
  double lambda_prime(double u) const override;
  double inverse_psi(double target, double start) const override;

 private:
  Family family_;
  double theta_;
};

ParametricGenerator make_reference(Family family, double theta);

// int_0^theta t / (e^t - 1) dt by adaptive Gauss-Kronrod.
double debye_integral(double theta);

double tau_of_theta(Family family, double theta);
double theta_of_tau(Family family, double tau);

enum class TauDirection { tau_of_theta, theta_of_tau };
double tau_theta_map(Family family, TauDirection direction, double value);

struct TauFunction {
  enum class Kind { constant, paper_sine };
  Kind kind = Kind::constant;
  double tau0 = 0.0;

  static TauFunction constant(double tau) { return {Kind::constant, tau}; }
  // tau(x) = 0.5 + 0.3 sin(1.6 pi x^1.5)
  static TauFunction sine() { return {Kind::paper_sine, 0.0}; }

  double operator()(double x) const;
  bool needs_covariate() const { return kind == Kind::paper_sine; }
};

// One draw of v given u by inverting dC/du = w (bracketed root finding).
double sample_conditional(const ArchimedeanGenerator& gen, double u, double w);

// Deterministic given seed. Sine designs carry x ~ U(0,1) as covariate "x".
ObservationSet sample_data(Family family, const TauFunction& tau, int n, std::uint64_t seed);

// Rank-based Kendall's tau (O(n^2), no ties assumed).
double empirical_kendall_tau(const std::vector<double>& u, const std::vector<double>& v);

}  // namespace splinecop
