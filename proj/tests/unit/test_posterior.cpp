#include <doctest.h>

#include <cmath>

#include "splinecop/error.hpp"
#include "splinecop/generator.hpp"
#include "splinecop/inference.hpp"
#include "splinecop/parametric.hpp"
#include "splinecop/posterior.hpp"
#include "support.hpp"

using namespace splinecop;
using testsupport::Gen;

namespace {

std::vector<double> normals(Gen& gen, int n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * gen.normal();
  return v;
}

ObservationSet uniform_data(Gen& gen, int n, int covariates = 0) {
  ObservationSet d;
  d.u = gen.vector(n, 0.0, 1.0);
  d.v = gen.vector(n, 0.0, 1.0);
  if (covariates > 0) {
    d.x.resize(n, covariates);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < covariates; ++j) d.x(i, j) = gen.uniform();
    for (int j = 0; j < covariates; ++j) d.covariate_names.push_back("x" + std::to_string(j + 1));
    d.covariate_maps.assign(covariates, AffineMap{});
  }
  return d;
}

// Mixed partial d/dv (dC/du), Richardson-extrapolated central differences.
// C is symmetric, so the roles are swapped to difference along the smaller
// coordinate: dC/du is then bounded away from 1 and keeps relative accuracy
// where the density is tiny.
double mixed_partial(const ArchimedeanGenerator& g, double a, double b) {
  const double u = std::max(a, b);
  const double v = std::min(a, b);
  const double h = 1e-2 * std::min(v, 1.0 - v);
  auto d = [&](double step) {
    return (g.conditional_cdf(u, v + step) - g.conditional_cdf(u, v - step)) / (2.0 * step);
  };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

// Unfloored computational form; negative where phi fails to be convex.
double signed_density(const ArchimedeanGenerator& g, double u, double v) {
  const double pu = g.psi(u);
  const double pv = g.psi(v);
  const double target = neg_log_sum_exp_neg(pu, pv);
  const double c = g.copula_cdf(u, v);
  return -(1.0 - g.lambda_prime(c)) * g.lambda(c) / (g.lambda(u) * g.lambda(v)) *
         std::exp(-pu - pv + 2.0 * target);
}

// Log multivariate Student density with nu degrees of freedom and scale s^2 I.
double log_student(const Eigen::VectorXd& z, double nu, double s2) {
  const double p = static_cast<double>(z.size());
  return std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) - 0.5 * p * std::log(nu * M_PI * s2) -
         0.5 * (nu + p) * std::log1p(z.squaredNorm() / (nu * s2));
}

}  // namespace

TEST_CASE("independence has zero log likelihood") {
  Gen gen(1);
  const auto data = uniform_data(gen, 300);
  const CopulaModel model(ModelSpec{});
  const std::vector<double> zero(11, 0.0);
  CHECK(std::abs(model.log_likelihood(zero, data)) < 1e-10);
  CHECK(std::abs(model.log_posterior(zero, data)) < 1e-10);
  CHECK(std::abs(log_likelihood(make_reference(Family::clayton, 1e-9), data)) < 1e-6);
}

TEST_CASE("computational density form against the mixed partial of C") {
  Gen gen(2);
  double worst = 0.0;
  int floored = 0;
  for (int i = 0; i < 1000; ++i) {
    const SplineGenerator g(make_generator_basis(11), normals(gen, 11, 1.0));
    const double u = gen.uniform();
    const double v = gen.uniform();
    const auto term = log_copula_density(g, u, v);
    const double reference = mixed_partial(g, u, v);
    if (term.floored) {
      // phi is not convex at C here; compare the signed form instead.
      ++floored;
      const double c = signed_density(g, u, v);
      CHECK(c <= 0.0);
      worst = std::max(worst, std::abs(c - reference) / std::max(std::abs(c), 1e-300));
    } else {
      const double c = std::exp(term.log_density);
      CHECK(c == doctest::Approx(signed_density(g, u, v)).epsilon(1e-12));
      worst = std::max(worst, std::abs(c - reference) / c);
    }
  }
  MESSAGE("floored observations: " << floored << ", worst relative error " << worst);
  CHECK(worst <= 1e-5);
  for (Family f : {Family::clayton, Family::frank, Family::gumbel}) {
    const auto g = make_reference(f, theta_of_tau(f, 0.4));
    for (int i = 0; i < 50; ++i) {
      const double u = gen.uniform(0.01, 0.99);
      const double v = gen.uniform(0.01, 0.99);
      const double c = std::exp(log_copula_density(g, u, v).log_density);
      CHECK(c == doctest::Approx(mixed_partial(g, u, v)).epsilon(1e-5));
    }
  }
}

TEST_CASE("finite-difference lambda' gives nearly the same likelihood") {
  Gen gen(3);
  const auto data = sample_data(Family::frank, TauFunction::constant(0.4), 300, 5);
  const SplineGenerator g(make_generator_basis(11), normals(gen, 11, 1.0));
  const double a = log_likelihood(g, data, {LambdaDerivative::analytic, 1});
  const double b = log_likelihood(g, data, {LambdaDerivative::finite_difference, 1});
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("Gumbel-equivalent coefficients beat independence on Gumbel data") {
  const auto data = sample_data(Family::gumbel, TauFunction::constant(0.5), 500, 11);
  const CopulaModel model(ModelSpec{});
  const double ones = model.log_likelihood(std::vector<double>(11, 1.0), data);
  const double zeros = model.log_likelihood(std::vector<double>(11, 0.0), data);
  CHECK(ones > zeros + 50.0);
  CHECK(ones == doctest::Approx(log_likelihood(make_reference(Family::gumbel, 2.0), data))
                    .epsilon(1e-10));
}

TEST_CASE("penalty terms") {
  const CopulaModel model(ModelSpec{});
  CHECK(model.log_prior(std::vector<double>(11, 0.0)) == 0.0);
  // Constant coefficients lie in the null space of the third-order penalty.
  CHECK(model.log_prior(std::vector<double>(11, 1.7)) == doctest::Approx(0.0));
  ModelSpec spec;
  spec.priors.generator.b = 2.0;
  const CopulaModel model_b(spec);
  const double rho = 11 - 3;
  CHECK(model_b.log_prior(std::vector<double>(11, 0.0)) ==
        doctest::Approx(-(1.0 + rho / 2.0) * std::log(2.0)));
}

TEST_CASE("penalty equals a Student prior on the differences") {
  Gen gen(4);
  for (double a : {0.5, 1.0, 3.0}) {
    for (double b : {0.1, 1.0, 5.0}) {
      ModelSpec spec;
      spec.priors.generator.a = a;
      spec.priors.generator.b = b;
      const CopulaModel model(spec);
      const Eigen::MatrixXd d = difference_matrix(11, 3);
      const auto t1 = normals(gen, 11, 1.0);
      const auto t2 = normals(gen, 11, 2.0);
      const Eigen::VectorXd z1 = d * Eigen::Map<const Eigen::VectorXd>(t1.data(), 11);
      const Eigen::VectorXd z2 = d * Eigen::Map<const Eigen::VectorXd>(t2.data(), 11);
      const double nu = 2.0 * a;
      const double s2 = b / a;
      const double expected = log_student(z1, nu, s2) - log_student(z2, nu, s2);
      CHECK(model.log_prior(t1) - model.log_prior(t2) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("additive model nests the unconditional model") {
  Gen gen(5);
  auto data = sample_data(Family::clayton, TauFunction::constant(0.3), 200, 7);
  data.x.resize(200, 1);
  for (int i = 0; i < 200; ++i) data.x(i, 0) = gen.uniform();
  data.covariate_names = {"x"};
  data.covariate_maps = {AffineMap{}};
  ModelSpec us;
  ModelSpec as;
  as.kind = ModelKind::additive;
  as.covariates = 1;
  as.priors.covariate.b = 3.0;
  const CopulaModel um(us);
  const CopulaModel am(as);
  CHECK(am.dimension() == 16);
  const auto gamma = normals(gen, 11, 1.0);
  auto params = gamma;
  params.resize(16, 0.0);
  CHECK(am.log_likelihood(params, data) == um.log_likelihood(gamma, data));
  const double beta_block = -(1.0 + 5.0 / 2.0) * std::log(3.0);
  CHECK(am.log_posterior(params, data) ==
        doctest::Approx(um.log_posterior(gamma, data) + beta_block).epsilon(1e-12));
  CHECK(log_marginal_posterior(as, params, data) == am.log_posterior(params, data));
}

TEST_CASE("additive and tensor likelihoods agree on the sum-structured Theta") {
  Gen gen(6);
  const auto data = sample_data(Family::frank, TauFunction::sine(), 200, 9);
  ModelSpec as;
  as.kind = ModelKind::additive;
  as.covariates = 1;
  ModelSpec ts;
  ts.kind = ModelKind::tensor;
  const CopulaModel am(as);
  const CopulaModel tm(ts);
  const auto gamma = normals(gen, 11, 1.0);
  const auto beta = normals(gen, 5, 0.5);
  auto params = gamma;
  params.insert(params.end(), beta.begin(), beta.end());
  std::vector<double> theta(55);
  for (int l = 0; l < 5; ++l)
    for (int k = 0; k < 11; ++k) theta[l * 11 + k] = gamma[k] + beta[l];
  CHECK(am.log_likelihood(params, data) ==
        doctest::Approx(tm.log_likelihood(theta, data)).epsilon(1e-10));
}

TEST_CASE("duplicating the data doubles the log likelihood") {
  Gen gen(7);
  const auto data = sample_data(Family::gumbel, TauFunction::constant(0.3), 150, 3);
  ObservationSet twice = data;
  twice.u.insert(twice.u.end(), data.u.begin(), data.u.end());
  twice.v.insert(twice.v.end(), data.v.begin(), data.v.end());
  const CopulaModel model(ModelSpec{});
  const auto theta = normals(gen, 11, 1.0);
  CHECK(model.log_likelihood(theta, twice) ==
        doctest::Approx(2.0 * model.log_likelihood(theta, data)).epsilon(1e-13));
  CHECK(model.log_posterior(theta, twice) - model.log_likelihood(theta, twice) ==
        model.log_prior(theta));
}

TEST_CASE("likelihood is invariant to re-anchoring g") {
  Gen gen(8);
  const auto data = sample_data(Family::clayton, TauFunction::constant(0.5), 200, 4);
  SplineGenerator g(make_generator_basis(11), normals(gen, 11, 1.0));
  const double base = log_likelihood(g, data);
  for (double shift : {-3.0, 0.5, 7.0}) {
    g.set_anchor_shift(shift);
    CHECK(log_likelihood(g, data) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("numerical gradient of the log posterior") {
  Gen gen(9);
  const auto data = sample_data(Family::frank, TauFunction::sine(), 300, 2);
  ModelSpec spec;
  spec.kind = ModelKind::flexpower;
  const CopulaModel model(spec);
  std::vector<double> p = normals(gen, model.dimension(), 0.5);
  const LogDensity f = [&](std::span<const double> x) { return model.log_posterior(x, data); };
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
  const Eigen::VectorXd grad = numerical_gradient(f, x);
  // Five-point stencil with a much larger step as the oracle.
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-3 * (1.0 + std::abs(x[i]));
    auto at = [&](double delta) {
      Eigen::VectorXd y = x;
      y[i] += delta;
      return f(std::span<const double>(y.data(), y.size()));
    };
    const double oracle = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    CHECK(grad[i] == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("model layouts") {
  ModelSpec s;
  s.kind = ModelKind::flexpower;
  const CopulaModel fp(s);
  CHECK(fp.dimension() == 21);
  REQUIRE(fp.blocks().size() == 3);
  CHECK(fp.blocks()[1].offset == 11);
  CHECK(fp.blocks()[2].offset == 16);
  s.kind = ModelKind::additive;
  s.covariates = 2;
  const CopulaModel add(s);
  CHECK(add.dimension() == 21);
  CHECK(add.blocks().size() == 3);
  s.kind = ModelKind::tensor;
  CHECK(CopulaModel(s).dimension() == 55);
  CHECK(parse_model_kind("flexpower") == ModelKind::flexpower);
  CHECK(to_string(ModelKind::tensor) == "tensor");
  CHECK_THROWS_AS(parse_model_kind("vine"), Error);
}

TEST_CASE("posterior argument errors") {
  Gen gen(10);
  const auto data = uniform_data(gen, 20);
  const CopulaModel model(ModelSpec{});
  CHECK_THROWS_AS(model.log_likelihood(std::vector<double>(10, 0.0), data), Error);
  ModelSpec as;
  as.kind = ModelKind::additive;
  as.covariates = 1;
  const CopulaModel am(as);
  // Conditional model without covariates.
  CHECK_THROWS_AS(am.log_likelihood(std::vector<double>(16, 0.0), data), Error);
  auto bad = data;
  bad.u[3] = 1.0;
  try {
    model.log_likelihood(std::vector<double>(11, 0.0), bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_data);
  }
  CHECK(model.log_posterior_or_neg_inf(std::vector<double>(11, 0.0), bad) ==
        -std::numeric_limits<double>::infinity());
  PriorConfig pc;
  pc.generator.a = 0.0;
  CHECK_THROWS_AS(pc.validate(), Error);
}
