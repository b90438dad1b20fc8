#pragma once

#include <memory>
#include <span>
#include <vector>

#include "splinecop/archimedean.hpp"
#include "splinecop/bspline.hpp"

namespace splinecop {

inline constexpr double kDefaultEpsilon = 1e-6;

// S(u) = -log(-log u), the Gumbel quantile function.
double transform_s(double u);
// Inverse of S: exp(-exp(-s)).
double transform_s_inverse(double s) noexcept;
// Unchecked variants for hot loops.
double transform_s_unchecked(double u) noexcept;

// Basis on (S(eps), S(1-eps)) used by every generator.
std::shared_ptr<const BSplineBasis> make_generator_basis(int size, double epsilon = kDefaultEpsilon);

struct GeneratorCoefficients {
  std::vector<double> theta;
  std::shared_ptr<const BSplineBasis> basis;
  double epsilon = kDefaultEpsilon;

  static GeneratorCoefficients make(std::vector<double> theta, double epsilon = kDefaultEpsilon);
};

struct InversionResult {
  double u = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// phi(u) = exp(-g(S(u))) with g'(s) = 1 + sum_k b_k(s) theta_k^2, g(lo) = 0,
// and g continued linearly outside [lo, hi] with the boundary slopes.
class SplineGenerator final : public ArchimedeanGenerator {
 public:
  SplineGenerator(std::shared_ptr<const BSplineBasis> basis, std::span<const double> theta);
  explicit SplineGenerator(const GeneratorCoefficients& gc);

  // Reuses storage; cheap enough to call once per observation.
  void set_coefficients(std::span<const double> theta);

  const BSplineBasis& basis() const noexcept { return *basis_; }
  std::span<const double> theta() const noexcept { return theta_; }

  double g(double s) const;
  double g_prime(double s) const;
  double g_second(double s) const;

  struct GPair {
    double g;
    double g_prime;
  };
  GPair g_pair(double s) const;

  // Constant added to g; all copula quantities are invariant to it.
  void set_anchor_shift(double shift) noexcept { shift_ = shift; }

  double psi(double u) const override;
  double lambda(double u) const override;
  double lambda_prime(double u) const override;
  double inverse_psi(double target, double start) const override;
  PsiLambda psi_lambda(double u) const override;

  // Newton iterations in S-space on f(s) = g(s) - target.
  InversionResult invert(double target, double start, double tol = 1e-12,
                         int max_iter = 50) const;

 private:
  std::shared_ptr<const BSplineBasis> basis_;
  std::vector<double> theta_;
  std::vector<double> weight_;  // theta_k^2
  std::vector<double> prefix_;  // sum_{k<j} weight_k * total_k
  double slope_lo_ = 1.0;
  double slope_hi_ = 1.0;
  double g_hi_ = 0.0;
  double shift_ = 0.0;
};

// Generic Kendall's tau of a spline generator, exposed for symmetry with
// the conditional module.
double kendall_tau(const GeneratorCoefficients& gc);

}  // namespace splinecop
