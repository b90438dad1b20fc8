#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splinecop/bspline.hpp"
#include "splinecop/conditional.hpp"
#include "splinecop/generator.hpp"
#include "splinecop/observations.hpp"

namespace splinecop {

enum class ModelKind { unconditional, additive, flexpower, tensor };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

// Gamma(a, b) prior on a block's penalty weight, integrated out.
struct BlockPrior {
  double a = 1.0;
  double b = 1.0;
  int order = 3;
  double ridge = 0.0;
};

struct PriorConfig {
  BlockPrior generator{1.0, 1.0, 3, 0.0};   // theta (unconditional, flex-power) or gamma
  BlockPrior covariate{1.0, 1.0, 2, 1e-6};  // beta blocks, flex-power alpha and beta
  // The tensor family is fitted with fixed penalty weights.
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  int tensor_order_s = 3;
  int tensor_order_x = 2;

  void validate() const;
};

struct LikelihoodOptions {
  LambdaDerivative derivative = LambdaDerivative::analytic;
  // Observations whose 1 - lambda'(C) had to be floored before failing.
  int max_floored = 1;
};

double log_likelihood(const ArchimedeanGenerator& gen, const ObservationSet& data,
                      const LikelihoodOptions& options = {});
double log_likelihood(const ConditionalParams& cp, const ObservationSet& data,
                      const LikelihoodOptions& options = {});

struct ModelSpec {
  ModelKind kind = ModelKind::unconditional;
  int K = 11;
  int K_star = 5;
  int covariates = 0;  // additive model only; flex-power and tensor use one
  double epsilon = kDefaultEpsilon;
  PriorConfig priors;
};

struct ParameterBlock {
  std::string name;
  int offset = 0;
  int size = 0;
  PenaltyMatrix penalty;
  BlockPrior prior;
};

// Flat parameter layout, likelihood and marginal posterior for one model
// family. Layouts:
//   unconditional: theta (K)
//   additive:      gamma (K), beta_1 .. beta_p (K* each)
//   flexpower:     theta (K), alpha (K*), beta (K*)
//   tensor:        vec(Theta), column-major K x K*
class CopulaModel {
 public:
  explicit CopulaModel(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  int dimension() const noexcept { return dimension_; }
  const std::vector<ParameterBlock>& blocks() const noexcept { return blocks_; }
  const std::shared_ptr<const BSplineBasis>& s_basis() const noexcept { return s_basis_; }
  const std::shared_ptr<const BSplineBasis>& x_basis() const noexcept { return x_basis_; }
  bool conditional() const noexcept { return spec_.kind != ModelKind::unconditional; }
  int covariates() const noexcept;

  GeneratorCoefficients generator_coefficients(std::span<const double> params) const;
  ConditionalParams conditional_params(std::span<const double> params) const;

  double log_likelihood(std::span<const double> params, const ObservationSet& data,
                        const LikelihoodOptions& options = {}) const;
  double log_prior(std::span<const double> params) const;
  double log_posterior(std::span<const double> params, const ObservationSet& data,
                       const LikelihoodOptions& options = {}) const;
  // -inf instead of throwing on numerical failure; used by optimisers and samplers.
  double log_posterior_or_neg_inf(std::span<const double> params,
                                  const ObservationSet& data) const noexcept;

  // Kendall's tau at x (conditional) or the unconditional tau.
  double tau(std::span<const double> params, std::span<const double> x = {}) const;
  double lambda(std::span<const double> params, double u, std::span<const double> x = {}) const;

  // Throws malformed_data or dimension_mismatch if the data cannot be used with this model.
  void check_data(const ObservationSet& data) const;

 private:
  void check_params(std::span<const double> params) const;

  ModelSpec spec_;
  int dimension_ = 0;
  std::vector<ParameterBlock> blocks_;
  std::shared_ptr<const BSplineBasis> s_basis_;
  std::shared_ptr<const BSplineBasis> x_basis_;
};

double log_marginal_posterior(const ModelSpec& spec, std::span<const double> params,
                              const ObservationSet& data);

}  // namespace splinecop
