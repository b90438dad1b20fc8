#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "splinecop/archimedean.hpp"
#include "splinecop/bspline.hpp"
#include "splinecop/generator.hpp"

namespace splinecop {

// theta_k(x) = gamma_k + sum_j sum_l b*_l(x_j) beta_{jl}
struct AdditiveParams {
  std::vector<double> gamma;
  std::vector<std::vector<double>> beta;  // one block of K* per covariate
};

// phi(t|x) = [phi_ref(t^alpha(x))]^beta(x),
// alpha(x) = 1 / (1 + (sum b*_k(x) alpha_k)^2), beta(x) = 1 + (sum b*_k(x) beta_k)^2
struct FlexPowerParams {
  std::vector<double> theta;
  std::vector<double> alpha;
  std::vector<double> beta;
};

// theta_k(x) = sum_l b*_l(x) Theta_{kl}
struct TensorParams {
  Eigen::MatrixXd theta;  // K x K*
};

struct ConditionalParams {
  std::variant<AdditiveParams, FlexPowerParams, TensorParams> variant;
  std::shared_ptr<const BSplineBasis> s_basis;
  std::shared_ptr<const BSplineBasis> x_basis;

  int covariates() const;
  int free_parameters() const;  // identification constraints removed
};

std::shared_ptr<const BSplineBasis> make_covariate_basis(int size);

struct PowerPair {
  double alpha = 1.0;
  double beta = 1.0;
};

struct ConditionalCoefficients {
  std::vector<double> theta;           // theta_k(x), or the reference theta for FlexPower
  std::optional<PowerPair> powers;     // FlexPower only
};

ConditionalCoefficients conditional_coefficients(const ConditionalParams& cp,
                                                 std::span<const double> x);

// phi_{alpha,beta}(t) = [phi_ref(t^alpha)]^beta for alpha in (0,1], beta >= 1.
class PowerTransformedGenerator final : public ArchimedeanGenerator {
 public:
  PowerTransformedGenerator(const ArchimedeanGenerator& reference, double alpha, double beta);

  void set_powers(double alpha, double beta);
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  double psi(double t) const override;
  double lambda(double t) const override;
  double lambda_prime(double t) const override;
  double inverse_psi(double target, double start) const override;
  PsiLambda psi_lambda(double t) const override;

 private:
  const ArchimedeanGenerator* ref_;
  double alpha_ = 1.0;
  double beta_ = 1.0;
};

// Produces the generator at covariate x, reusing internal storage. One
// instance per thread; the returned reference is valid until the next call.
class ConditionalGeneratorFactory {
 public:
  explicit ConditionalGeneratorFactory(const ConditionalParams& cp);
  ConditionalGeneratorFactory(const ConditionalGeneratorFactory&) = delete;
  ConditionalGeneratorFactory& operator=(const ConditionalGeneratorFactory&) = delete;

  const ArchimedeanGenerator& at(std::span<const double> x);

 private:
  const ConditionalParams* cp_;
  std::vector<double> theta_x_;
  std::optional<SplineGenerator> spline_;
  std::optional<PowerTransformedGenerator> power_;
};

GeneratorValues eval_conditional_generator(const ConditionalParams& cp, double u,
                                           std::span<const double> x,
                                           LambdaDerivative mode = LambdaDerivative::finite_difference);

double conditional_tau(const ConditionalParams& cp, std::span<const double> x);

// vec(Theta)' (kappa1 I_{K*} (x) P1 + kappa2 P2 (x) I_K) vec(Theta)
double tensor_penalty(const Eigen::MatrixXd& theta, double kappa1, double kappa2, int r1 = 3,
                      int r2 = 2);

}  // namespace splinecop
