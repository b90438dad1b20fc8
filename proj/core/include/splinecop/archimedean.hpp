#pragma once

namespace splinecop {

struct GeneratorValues {
  double phi = 0.0;
  double phi_prime = 0.0;
  double lambda = 0.0;
  double lambda_prime = 0.0;
};

enum class LambdaDerivative { analytic, finite_difference };

// Central-difference step used for lambda'(u).
inline double lambda_fd_step(double u) noexcept {
  return 1e-5 * (u < 1.0 - u ? u : 1.0 - u);
}

// Archimedean generator phi on (0,1), parameterised through
//   psi(u) = -log phi(u)      (increasing in u)
//   lambda(u) = phi(u) / phi'(u).
// Working on the log scale keeps C(u,v) and the likelihood stable when phi
// spans many orders of magnitude.
class ArchimedeanGenerator {
 public:
  virtual ~ArchimedeanGenerator() = default;

  virtual double psi(double u) const = 0;
  virtual double lambda(double u) const = 0;
  // Closed-form or analytic lambda'(u).
  virtual double lambda_prime(double u) const = 0;
  // u such that psi(u) = target; `start` is a guess in (0,1).
  virtual double inverse_psi(double target, double start) const = 0;

  struct PsiLambda {
    double psi;
    double lambda;
  };
  virtual PsiLambda psi_lambda(double u) const { return {psi(u), lambda(u)}; }

  double phi(double u) const;
  double lambda_prime_fd(double u) const;
  GeneratorValues evaluate(double u,
                           LambdaDerivative mode = LambdaDerivative::finite_difference) const;

  // phi^{-1}(x) for x > 0.
  double inverse(double x, double start) const;

  // C(u,v) = phi^{-1}(phi(u) + phi(v)).
  double copula_cdf(double u, double v) const;
  // dC/du at (u, v).
  double conditional_cdf(double u, double v) const;

  double kendall_tau() const;
};

// -log(exp(-a) + exp(-b)).
double neg_log_sum_exp_neg(double a, double b) noexcept;

// One observation's log copula density, using
//   c = -(1 - lambda'(C)) lambda(C) / (lambda(u) lambda(v))
//       * phi(u) phi(v) / (phi(u) + phi(v))^2.
struct DensityTerm {
  double log_density = 0.0;
  double copula = 0.0;  // C(u,v)
  bool floored = false;  // 1 - lambda'(C) <= 0 was floored
};
DensityTerm log_copula_density(const ArchimedeanGenerator& gen, double u, double v,
                               LambdaDerivative mode = LambdaDerivative::analytic);

}  // namespace splinecop
