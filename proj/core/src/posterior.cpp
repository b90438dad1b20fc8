#include "splinecop/posterior.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "splinecop/error.hpp"

namespace splinecop {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::unconditional: return "unconditional";
    case ModelKind::additive: return "additive";
    case ModelKind::flexpower: return "flexpower";
    case ModelKind::tensor: return "tensor";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "unconditional") return ModelKind::unconditional;
  if (name == "additive") return ModelKind::additive;
  if (name == "flexpower") return ModelKind::flexpower;
  if (name == "tensor") return ModelKind::tensor;
  throw Error(Errc::malformed_config, "unknown model '" + std::string(name) + "'");
}

void PriorConfig::validate() const {
  for (const BlockPrior* bp : {&generator, &covariate}) {
    if (!(bp->a > 0.0) || !(bp->b > 0.0)) {
      throw Error(Errc::malformed_config, "gamma prior needs a > 0 and b > 0");
    }
    if (!(bp->ridge >= 0.0)) throw Error(Errc::malformed_config, "ridge must be >= 0");
  }
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) {
    throw Error(Errc::malformed_config, "tensor penalty weights must be >= 0");
  }
}

namespace {

void fail_floored(std::size_t i) {
  throw Error(Errc::density_nonpositive,
              "1 - lambda'(C) <= 0 repeatedly; last at observation " + std::to_string(i));
}

}  // namespace

double log_likelihood(const ArchimedeanGenerator& gen, const ObservationSet& data,
                      const LikelihoodOptions& options) {
  double sum = 0.0;
  int floored = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto term = log_copula_density(gen, data.u[i], data.v[i], options.derivative);
    if (term.floored && ++floored > options.max_floored) fail_floored(i);
    if (!std::isfinite(term.log_density)) {
      throw Error(Errc::density_nonpositive,
                  "non-finite log density at observation " + std::to_string(i));
    }
    sum += term.log_density;
  }
  return sum;
}

double log_likelihood(const ConditionalParams& cp, const ObservationSet& data,
                      const LikelihoodOptions& options) {
  const int p = data.covariates();
  if (p != cp.covariates()) {
    throw Error(Errc::dimension_mismatch, "data covariates do not match the model");
  }
  ConditionalGeneratorFactory factory(cp);
  std::vector<double> x(p);
  double sum = 0.0;
  int floored = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < p; ++j) x[j] = data.x(static_cast<Eigen::Index>(i), j);
    const auto& gen = factory.at(x);
    const auto term = log_copula_density(gen, data.u[i], data.v[i], options.derivative);
    if (term.floored && ++floored > options.max_floored) fail_floored(i);
    if (!std::isfinite(term.log_density)) {
      throw Error(Errc::density_nonpositive,
                  "non-finite log density at observation " + std::to_string(i));
    }
    sum += term.log_density;
  }
  return sum;
}

CopulaModel::CopulaModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.priors.validate();
  const int k = spec_.K;
  const int ks = spec_.K_star;
  s_basis_ = make_generator_basis(k, spec_.epsilon);
  if (spec_.kind != ModelKind::unconditional) x_basis_ = make_covariate_basis(ks);

  const auto& gp = spec_.priors.generator;
  const auto& cp = spec_.priors.covariate;
  auto add_block = [this](std::string name, int size, const BlockPrior& prior) {
    ParameterBlock b;
    b.name = std::move(name);
    b.offset = dimension_;
    b.size = size;
    b.prior = prior;
    b.penalty = difference_penalty(size, prior.order, prior.ridge);
    dimension_ += size;
    blocks_.push_back(std::move(b));
  };

  switch (spec_.kind) {
    case ModelKind::unconditional:
      add_block("theta", k, gp);
      break;
    case ModelKind::additive:
      if (spec_.covariates < 1) spec_.covariates = 1;
      add_block("gamma", k, gp);
      for (int j = 0; j < spec_.covariates; ++j) {
        add_block(spec_.covariates == 1 ? "beta" : "beta" + std::to_string(j + 1), ks, cp);
      }
      break;
    case ModelKind::flexpower:
      spec_.covariates = 1;
      add_block("theta", k, gp);
      add_block("alpha", ks, cp);
      add_block("beta", ks, cp);
      break;
    case ModelKind::tensor: {
      spec_.covariates = 1;
      // Penalised through tensor_penalty with fixed weights; one block for sampling.
      ParameterBlock b;
      b.name = "Theta";
      b.offset = 0;
      b.size = k * ks;
      b.prior = gp;
      b.penalty.matrix = Eigen::MatrixXd::Zero(b.size, b.size);
      dimension_ = b.size;
      blocks_.push_back(std::move(b));
      break;
    }
  }
  if (spec_.kind == ModelKind::unconditional) spec_.covariates = 0;
}

int CopulaModel::covariates() const noexcept { return spec_.covariates; }

void CopulaModel::check_params(std::span<const double> params) const {
  if (static_cast<int>(params.size()) != dimension_) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(dimension_) +
                                              " parameters, got " +
                                              std::to_string(params.size()));
  }
}

void CopulaModel::check_data(const ObservationSet& data) const {
  // The unconditional model ignores any covariate columns.
  if (spec_.kind != ModelKind::unconditional && data.covariates() != spec_.covariates) {
    throw Error(Errc::dimension_mismatch,
                "model expects " + std::to_string(spec_.covariates) + " covariates, data has " +
                    std::to_string(data.covariates()));
  }
  data.validate();
}

GeneratorCoefficients CopulaModel::generator_coefficients(std::span<const double> params) const {
  check_params(params);
  if (spec_.kind != ModelKind::unconditional) {
    throw Error(Errc::dimension_mismatch, "generator coefficients need the unconditional model");
  }
  GeneratorCoefficients gc;
  gc.theta.assign(params.begin(), params.end());
  gc.basis = s_basis_;
  gc.epsilon = spec_.epsilon;
  return gc;
}

ConditionalParams CopulaModel::conditional_params(std::span<const double> params) const {
  check_params(params);
  ConditionalParams cp;
  cp.s_basis = s_basis_;
  cp.x_basis = x_basis_;
  const int k = spec_.K;
  const int ks = spec_.K_star;
  auto slice = [&](int offset, int size) {
    return std::vector<double>(params.begin() + offset, params.begin() + offset + size);
  };
  switch (spec_.kind) {
    case ModelKind::additive: {
      AdditiveParams ap;
      ap.gamma = slice(0, k);
      for (int j = 0; j < spec_.covariates; ++j) ap.beta.push_back(slice(k + j * ks, ks));
      cp.variant = std::move(ap);
      break;
    }
    case ModelKind::flexpower:
      cp.variant = FlexPowerParams{slice(0, k), slice(k, ks), slice(k + ks, ks)};
      break;
    case ModelKind::tensor: {
      TensorParams tp;
      tp.theta = Eigen::Map<const Eigen::MatrixXd>(params.data(), k, ks);
      cp.variant = std::move(tp);
      break;
    }
    case ModelKind::unconditional:
      throw Error(Errc::dimension_mismatch, "conditional parameters need a conditional model");
  }
  return cp;
}

double CopulaModel::log_likelihood(std::span<const double> params, const ObservationSet& data,
                                   const LikelihoodOptions& options) const {
  check_data(data);
  if (spec_.kind == ModelKind::unconditional) {
    const SplineGenerator gen(s_basis_, params);
    return splinecop::log_likelihood(gen, data, options);
  }
  return splinecop::log_likelihood(conditional_params(params), data, options);
}

double CopulaModel::log_prior(std::span<const double> params) const {
  check_params(params);
  if (spec_.kind == ModelKind::tensor) {
    const Eigen::Map<const Eigen::MatrixXd> theta(params.data(), spec_.K, spec_.K_star);
    const auto& pr = spec_.priors;
    return -0.5 * tensor_penalty(theta, pr.kappa1, pr.kappa2, pr.tensor_order_s,
                                 pr.tensor_order_x);
  }
  double sum = 0.0;
  for (const auto& b : blocks_) {
    const Eigen::Map<const Eigen::VectorXd> c(params.data() + b.offset, b.size);
    const double q = b.penalty.quadratic_form(c);
    sum -= (b.prior.a + 0.5 * b.penalty.rank) * std::log(b.prior.b + 0.5 * q);
  }
  return sum;
}

double CopulaModel::log_posterior(std::span<const double> params, const ObservationSet& data,
                                  const LikelihoodOptions& options) const {
  return log_likelihood(params, data, options) + log_prior(params);
}

double CopulaModel::log_posterior_or_neg_inf(std::span<const double> params,
                                             const ObservationSet& data) const noexcept {
  try {
    const double v = log_posterior(params, data);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

double CopulaModel::tau(std::span<const double> params, std::span<const double> x) const {
  if (spec_.kind == ModelKind::unconditional) {
    return SplineGenerator(s_basis_, params).kendall_tau();
  }
  return conditional_tau(conditional_params(params), x);
}

double CopulaModel::lambda(std::span<const double> params, double u,
                           std::span<const double> x) const {
  if (spec_.kind == ModelKind::unconditional) {
    return SplineGenerator(s_basis_, params).lambda(u);
  }
  const auto cp = conditional_params(params);
  ConditionalGeneratorFactory f(cp);
  return f.at(x).lambda(u);
}

double log_marginal_posterior(const ModelSpec& spec, std::span<const double> params,
                              const ObservationSet& data) {
  return CopulaModel(spec).log_posterior(params, data);
}

}  // namespace splinecop
