#include "splinecop/conditional.hpp"

#include <cmath>
#include <string>

#include "splinecop/error.hpp"

namespace splinecop {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_covariates(std::span<const double> x, int expected) {
  if (static_cast<int>(x.size()) != expected) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(expected) +
                                              " covariates, got " + std::to_string(x.size()));
  }
  for (double xi : x) {
    if (!(xi >= 0.0 && xi <= 1.0)) {
      throw Error(Errc::out_of_range, "covariate values must lie in [0,1]");
    }
  }
}

double spline_combination(const BSplineBasis& basis, double x, std::span<const double> coef) {
  const auto loc = basis.local_values(x);
  double sum = 0.0;
  for (int a = 0; a < 4; ++a) sum += loc.value[a] * coef[loc.first + a];
  return sum;
}

void check_size(std::size_t got, int expected, const char* what) {
  if (static_cast<int>(got) != expected) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": expected " +
                                              std::to_string(expected) + " entries, got " +
                                              std::to_string(got));
  }
}

}  // namespace

std::shared_ptr<const BSplineBasis> make_covariate_basis(int size) {
  return std::make_shared<const BSplineBasis>(0.0, 1.0, size);
}

int ConditionalParams::covariates() const {
  return std::visit(overloaded{
                        [](const AdditiveParams& p) { return static_cast<int>(p.beta.size()); },
                        [](const FlexPowerParams&) { return 1; },
                        [](const TensorParams&) { return 1; },
                    },
                    variant);
}

int ConditionalParams::free_parameters() const {
  const int k = s_basis->size();
  const int ks = x_basis->size();
  return std::visit(overloaded{
                        [&](const AdditiveParams& p) {
                          return k + static_cast<int>(p.beta.size()) * (ks - 1);
                        },
                        [&](const FlexPowerParams&) { return k + 2 * ks; },
                        [&](const TensorParams&) { return k * ks; },
                    },
                    variant);
}

ConditionalCoefficients conditional_coefficients(const ConditionalParams& cp,
                                                 std::span<const double> x) {
  const int k = cp.s_basis->size();
  const int ks = cp.x_basis->size();
  check_covariates(x, cp.covariates());
  ConditionalCoefficients out;
  std::visit(overloaded{
                 [&](const AdditiveParams& p) {
                   check_size(p.gamma.size(), k, "gamma");
                   double shift = 0.0;
                   for (std::size_t j = 0; j < p.beta.size(); ++j) {
                     check_size(p.beta[j].size(), ks, "beta block");
                     shift += spline_combination(*cp.x_basis, x[j], p.beta[j]);
                   }
                   out.theta.resize(k);
                   for (int i = 0; i < k; ++i) out.theta[i] = p.gamma[i] + shift;
                 },
                 [&](const FlexPowerParams& p) {
                   check_size(p.theta.size(), k, "theta");
                   check_size(p.alpha.size(), ks, "alpha");
                   check_size(p.beta.size(), ks, "beta");
                   const double a = spline_combination(*cp.x_basis, x[0], p.alpha);
                   const double b = spline_combination(*cp.x_basis, x[0], p.beta);
                   out.theta = p.theta;
                   out.powers = PowerPair{1.0 / (1.0 + a * a), 1.0 + b * b};
                 },
                 [&](const TensorParams& p) {
                   if (p.theta.rows() != k || p.theta.cols() != ks) {
                     throw Error(Errc::dimension_mismatch, "Theta must be K x K*");
                   }
                   const auto loc = cp.x_basis->local_values(x[0]);
                   out.theta.assign(k, 0.0);
                   for (int i = 0; i < k; ++i) {
                     for (int a = 0; a < 4; ++a) {
                       out.theta[i] += loc.value[a] * p.theta(i, loc.first + a);
                     }
                   }
                 },
             },
             cp.variant);
  return out;
}

PowerTransformedGenerator::PowerTransformedGenerator(const ArchimedeanGenerator& reference,
                                                     double alpha, double beta)
    : ref_(&reference) {
  set_powers(alpha, beta);
}

void PowerTransformedGenerator::set_powers(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 1.0) || !(beta >= 1.0) || !std::isfinite(beta)) {
    throw Error(Errc::out_of_range, "power transform needs alpha in (0,1] and beta >= 1");
  }
  alpha_ = alpha;
  beta_ = beta;
}

double PowerTransformedGenerator::psi(double t) const {
  return beta_ * ref_->psi(std::pow(t, alpha_));
}

double PowerTransformedGenerator::lambda(double t) const {
  const double ta = std::pow(t, alpha_);
  return ref_->lambda(ta) * (t / ta) / (alpha_ * beta_);
}

ArchimedeanGenerator::PsiLambda PowerTransformedGenerator::psi_lambda(double t) const {
  const double ta = std::pow(t, alpha_);
  const auto pl = ref_->psi_lambda(ta);
  return {beta_ * pl.psi, pl.lambda * (t / ta) / (alpha_ * beta_)};
}

// d/dt [lambda_ref(t^a) t^{1-a}] / (a b)
//   = [a lambda_ref'(t^a) + (1-a) lambda_ref(t^a) / t^a] / (a b)
double PowerTransformedGenerator::lambda_prime(double t) const {
  const double ta = std::pow(t, alpha_);
  return (alpha_ * ref_->lambda_prime(ta) + (1.0 - alpha_) * ref_->lambda(ta) / ta) /
         (alpha_ * beta_);
}

double PowerTransformedGenerator::inverse_psi(double target, double start) const {
  const double w = ref_->inverse_psi(target / beta_, std::pow(start, alpha_));
  return std::exp(std::log(w) / alpha_);
}

ConditionalGeneratorFactory::ConditionalGeneratorFactory(const ConditionalParams& cp) : cp_(&cp) {
  if (const auto* fp = std::get_if<FlexPowerParams>(&cp.variant)) {
    spline_.emplace(cp.s_basis, fp->theta);
    power_.emplace(*spline_, 1.0, 1.0);
  }
}

const ArchimedeanGenerator& ConditionalGeneratorFactory::at(std::span<const double> x) {
  if (power_) {
    const auto& fp = std::get<FlexPowerParams>(cp_->variant);
    if (x.size() != 1) throw Error(Errc::dimension_mismatch, "flex-power takes one covariate");
    const double a = spline_combination(*cp_->x_basis, x[0], fp.alpha);
    const double b = spline_combination(*cp_->x_basis, x[0], fp.beta);
    power_->set_powers(1.0 / (1.0 + a * a), 1.0 + b * b);
    return *power_;
  }
  const int k = cp_->s_basis->size();
  theta_x_.resize(k);
  if (const auto* ad = std::get_if<AdditiveParams>(&cp_->variant)) {
    if (x.size() != ad->beta.size()) {
      throw Error(Errc::dimension_mismatch, "covariate count does not match beta blocks");
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < ad->beta.size(); ++j) {
      shift += spline_combination(*cp_->x_basis, x[j], ad->beta[j]);
    }
    for (int i = 0; i < k; ++i) theta_x_[i] = ad->gamma[i] + shift;
  } else {
    theta_x_ = conditional_coefficients(*cp_, x).theta;
  }
  if (spline_) {
    spline_->set_coefficients(theta_x_);
  } else {
    spline_.emplace(cp_->s_basis, theta_x_);
  }
  return *spline_;
}

GeneratorValues eval_conditional_generator(const ConditionalParams& cp, double u,
                                           std::span<const double> x, LambdaDerivative mode) {
  check_covariates(x, cp.covariates());
  ConditionalGeneratorFactory factory(cp);
  return factory.at(x).evaluate(u, mode);
}

double conditional_tau(const ConditionalParams& cp, std::span<const double> x) {
  check_covariates(x, cp.covariates());
  ConditionalGeneratorFactory factory(cp);
  return factory.at(x).kendall_tau();
}

double tensor_penalty(const Eigen::MatrixXd& theta, double kappa1, double kappa2, int r1,
                      int r2) {
  const int k = static_cast<int>(theta.rows());
  const int ks = static_cast<int>(theta.cols());
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) {
    throw Error(Errc::out_of_range, "penalty weights must be nonnegative");
  }
  const Eigen::MatrixXd p1 = difference_penalty(k, r1).matrix;
  const Eigen::MatrixXd p2 = difference_penalty(ks, r2).matrix;
  // With vec stacking columns: (I (x) P1) vec(T) = vec(P1 T), (P2 (x) I) vec(T) = vec(T P2).
  const double s_part = (theta.array() * (p1 * theta).array()).sum();
  const double x_part = (theta.array() * (theta * p2).array()).sum();
  return kappa1 * s_part + kappa2 * x_part;
}

}  // namespace splinecop
