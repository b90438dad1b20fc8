#include <doctest.h>

#include <cmath>

#include "splinecop/conditional.hpp"
#include "splinecop/error.hpp"
#include "splinecop/generator.hpp"
#include "splinecop/parametric.hpp"
#include "support.hpp"

using namespace splinecop;
using testsupport::Gen;

namespace {

constexpr int kK = 11;
constexpr int kKs = 5;

ConditionalParams additive(std::vector<double> gamma, std::vector<std::vector<double>> beta) {
  ConditionalParams cp;
  cp.variant = AdditiveParams{std::move(gamma), std::move(beta)};
  cp.s_basis = make_generator_basis(kK);
  cp.x_basis = make_covariate_basis(kKs);
  return cp;
}

ConditionalParams flexpower(std::vector<double> theta, std::vector<double> alpha,
                            std::vector<double> beta) {
  ConditionalParams cp;
  cp.variant = FlexPowerParams{std::move(theta), std::move(alpha), std::move(beta)};
  cp.s_basis = make_generator_basis(kK);
  cp.x_basis = make_covariate_basis(kKs);
  return cp;
}

ConditionalParams tensor(Eigen::MatrixXd theta) {
  ConditionalParams cp;
  cp.variant = TensorParams{std::move(theta)};
  cp.s_basis = make_generator_basis(kK);
  cp.x_basis = make_covariate_basis(kKs);
  return cp;
}

std::vector<double> normals(Gen& gen, int n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * gen.normal();
  return v;
}

// r-th forward differences computed by repeated differencing.
std::vector<double> differences(std::vector<double> v, int r) {
  for (int k = 0; k < r; ++k) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
  }
  return v;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("additive coefficients with zero covariate effect") {
  Gen gen(1);
  const auto gamma = normals(gen, kK, 1.0);
  const auto cp = additive(gamma, {std::vector<double>(kKs, 0.0)});
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    const auto c = conditional_coefficients(cp, std::vector<double>{x});
    CHECK(!c.powers);
    for (int k = 0; k < kK; ++k) CHECK(c.theta[k] == doctest::Approx(gamma[k]).epsilon(1e-15));
  }
  // gamma = 1 is the Gumbel(2) generator at every x.
  const auto gumbel = additive(std::vector<double>(kK, 1.0), {std::vector<double>(kKs, 0.0)});
  for (double x : {0.1, 0.6}) {
    for (double u : {0.05, 0.4, 0.9}) {
      const auto ev = eval_conditional_generator(gumbel, u, std::vector<double>{x});
      CHECK(ev.lambda == doctest::Approx(u * std::log(u) / 2.0).epsilon(1e-13));
    }
  }
  CHECK(std::abs(conditional_tau(additive(std::vector<double>(kK, 0.0),
                                          {std::vector<double>(kKs, 0.0)}),
                                 std::vector<double>{0.4})) < 1e-9);
}

TEST_CASE("additive coefficients shift every theta_k by the covariate spline") {
  Gen gen(2);
  const auto gamma = normals(gen, kK, 1.0);
  const auto b1 = normals(gen, kKs, 1.0);
  const auto b2 = normals(gen, kKs, 1.0);
  const auto cp = additive(gamma, {b1, b2});
  const auto basis = make_covariate_basis(kKs);
  const std::vector<double> x{0.35, 0.8};
  const auto e1 = basis->eval(x[0], BasisMode::value);
  const auto e2 = basis->eval(x[1], BasisMode::value);
  double shift = 0.0;
  for (int l = 0; l < kKs; ++l) shift += e1[l] * b1[l] + e2[l] * b2[l];
  const auto c = conditional_coefficients(cp, x);
  for (int k = 0; k < kK; ++k) CHECK(c.theta[k] == doctest::Approx(gamma[k] + shift));
  CHECK(cp.free_parameters() == kK + 2 * (kKs - 1));
  CHECK(cp.covariates() == 2);
}

TEST_CASE("flex-power powers stay in range") {
  Gen gen(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto cp = flexpower(normals(gen, kK, 1.0), normals(gen, kKs, 2.0),
                              normals(gen, kKs, 2.0));
    for (int i = 0; i <= 100; ++i) {
      const auto c = conditional_coefficients(cp, std::vector<double>{i / 100.0});
      REQUIRE(c.powers);
      CHECK(c.powers->alpha > 0.0);
      CHECK(c.powers->alpha <= 1.0);
      CHECK(c.powers->beta >= 1.0);
    }
  }
  const auto zero = flexpower(std::vector<double>(kK, 1.0), std::vector<double>(kKs, 0.0),
                              std::vector<double>(kKs, 0.0));
  for (double x : {0.0, 0.5, 1.0}) {
    const auto c = conditional_coefficients(zero, std::vector<double>{x});
    CHECK(c.powers->alpha == 1.0);
    CHECK(c.powers->beta == 1.0);
  }
}

TEST_CASE("flex-power with identity powers reproduces the reference") {
  Gen gen(4);
  const auto theta = normals(gen, kK, 1.0);
  const auto cp = flexpower(theta, std::vector<double>(kKs, 0.0), std::vector<double>(kKs, 0.0));
  const SplineGenerator ref(make_generator_basis(kK), theta);
  for (int i = 0; i < 30; ++i) {
    const double u = gen.uniform();
    const std::vector<double> x{gen.uniform()};
    const auto a = eval_conditional_generator(cp, u, x);
    const auto b = ref.evaluate(u);
    CHECK(a.phi == doctest::Approx(b.phi).epsilon(1e-13));
    CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-13));
    CHECK(a.lambda_prime == doctest::Approx(b.lambda_prime).epsilon(1e-8));
  }
  CHECK(conditional_tau(cp, std::vector<double>{0.3}) ==
        doctest::Approx(ref.kendall_tau()).epsilon(1e-12));
}

TEST_CASE("power transform lambda against finite differences of phi") {
  Gen gen(5);
  double worst = 0.0;
  double worst_prime = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const SplineGenerator ref(make_generator_basis(kK), normals(gen, kK, 1.0));
    const PowerTransformedGenerator pg(ref, gen.uniform(0.2, 1.0), gen.uniform(1.0, 4.0));
    for (int i = 0; i < 20; ++i) {
      const double u = gen.uniform(0.05, 0.95);
      // lambda = phi / phi' = -1 / psi'.
      const double h = 1e-5 * u;
      const double dpsi = (pg.psi(u + h) - pg.psi(u - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(pg.lambda(u) + 1.0 / dpsi) / std::abs(pg.lambda(u)));
      const double h2 = 1e-5 * u;
      const double dl = (pg.lambda(u + h2) - pg.lambda(u - h2)) / (2.0 * h2);
      worst_prime = std::max(worst_prime, std::abs(pg.lambda_prime(u) - dl) /
                                              std::max(1.0, std::abs(dl)));
    }
  }
  CHECK(worst < 1e-6);
  CHECK(worst_prime < 1e-6);
}

TEST_CASE("power transforms of closed-form references") {
  // Gumbel: [(-log t^a)^z]^b = a^{zb} (-log t)^{zb}, Gumbel with parameter z b.
  const auto gumbel = make_reference(Family::gumbel, 1.5);
  for (double a : {0.3, 0.7, 1.0}) {
    for (double b : {1.0, 2.0}) {
      const PowerTransformedGenerator pg(gumbel, a, b);
      CHECK(pg.kendall_tau() == doctest::Approx(1.0 - 1.0 / (1.5 * b)).epsilon(1e-9));
    }
  }
  // Clayton: (t^{-a theta} - 1) / theta is Clayton(a theta) up to scale.
  const auto clayton = make_reference(Family::clayton, 2.0);
  const PowerTransformedGenerator pc(clayton, 0.5, 1.0);
  CHECK(pc.kendall_tau() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK_THROWS_AS(PowerTransformedGenerator(gumbel, 1.5, 1.0), Error);
  CHECK_THROWS_AS(PowerTransformedGenerator(gumbel, 0.5, 0.5), Error);
}

TEST_CASE("exterior power raises tau monotonically") {
  Gen gen(6);
  const auto theta = normals(gen, kK, 0.7);
  const SplineGenerator ref(make_generator_basis(kK), theta);
  const double tau0 = ref.kendall_tau();
  const std::vector<double> x{0.42};
  double previous = tau0;
  for (double c : {0.3, 0.6, 1.0, 1.5}) {
    // Constant coefficient vectors give beta(x) = 1 + c^2 for every x.
    const double t = conditional_tau(
        flexpower(theta, std::vector<double>(kKs, 0.0), std::vector<double>(kKs, c)), x);
    CHECK(t > previous);
    previous = t;
  }
}

TEST_CASE("interior power lowers tau for a Clayton reference") {
  const auto clayton = make_reference(Family::clayton, 1.0);
  double previous = clayton.kendall_tau();
  for (double a : {0.9, 0.7, 0.5, 0.3}) {
    const double t = PowerTransformedGenerator(clayton, a, 1.0).kendall_tau();
    CHECK(t == doctest::Approx(a / (a + 2.0)).epsilon(1e-9));
    CHECK(t < previous);
    previous = t;
  }
}

TEST_CASE("interior power on a spline reference is a shift in S") {
  // S(t^a) = S(t) - log a, so the interior transform evaluates g' further
  // up the S axis. Tau then follows the shape of g' and need not fall:
  // with more mass in g' at large s it rises.
  Gen gen(6);
  const auto theta = normals(gen, kK, 0.7);
  const SplineGenerator ref(make_generator_basis(kK), theta);
  const PowerTransformedGenerator p(ref, 0.4, 1.0);
  for (double t : {0.05, 0.3, 0.7, 0.95}) {
    CHECK(p.psi(t) == doctest::Approx(ref.g(transform_s(t) - std::log(0.4))).epsilon(1e-12));
  }
  const double tau0 = ref.kendall_tau();
  double lo = tau0;
  double hi = tau0;
  for (double c : {0.3, 0.6, 1.0, 1.5}) {
    const double t = conditional_tau(
        flexpower(theta, std::vector<double>(kKs, c), std::vector<double>(kKs, 0.0)),
        std::vector<double>{0.42});
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  MESSAGE("tau0 " << tau0 << ", interior-power range [" << lo << ", " << hi << "]");
  CHECK(hi > tau0);
}

TEST_CASE("tensor penalty against a loop over differences") {
  Gen gen(7);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd theta(kK, kKs);
    for (int i = 0; i < kK; ++i)
      for (int j = 0; j < kKs; ++j) theta(i, j) = gen.normal();
    const double k1 = gen.uniform(0.0, 3.0);
    const double k2 = gen.uniform(0.0, 3.0);
    double s_part = 0.0;
    for (int j = 0; j < kKs; ++j) {
      std::vector<double> col(kK);
      for (int i = 0; i < kK; ++i) col[i] = theta(i, j);
      s_part += sum_sq(differences(col, 3));
    }
    double x_part = 0.0;
    for (int i = 0; i < kK; ++i) {
      std::vector<double> row(kKs);
      for (int j = 0; j < kKs; ++j) row[j] = theta(i, j);
      x_part += sum_sq(differences(row, 2));
    }
    const double expected = k1 * s_part + k2 * x_part;
    CHECK(tensor_penalty(theta, k1, k2) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(tensor_penalty(theta, 0.0, k2) == doctest::Approx(k2 * x_part).epsilon(1e-10));
  }
  CHECK(tensor_penalty(Eigen::MatrixXd::Zero(kK, kKs), 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(tensor_penalty(Eigen::MatrixXd::Zero(kK, kKs), -1.0, 1.0), Error);
}

TEST_CASE("tensor and additive parameterisations") {
  Gen gen(8);
  const auto gamma = normals(gen, kK, 1.0);
  const auto beta = normals(gen, kKs, 1.0);
  // Theta_kl = gamma_k + beta_l reproduces the additive theta_k(x) because the
  // covariate basis sums to one.
  Eigen::MatrixXd sum_form(kK, kKs);
  Eigen::MatrixXd product_form(kK, kKs);
  for (int k = 0; k < kK; ++k) {
    for (int l = 0; l < kKs; ++l) {
      sum_form(k, l) = gamma[k] + beta[l];
      product_form(k, l) = gamma[k] * beta[l];
    }
  }
  const auto add = additive(gamma, {beta});
  const std::vector<double> x{0.6};
  CHECK(conditional_tau(tensor(sum_form), x) ==
        doctest::Approx(conditional_tau(add, x)).epsilon(1e-12));
  // A rank-one Theta is a different model.
  CHECK(std::abs(conditional_tau(tensor(product_form), x) - conditional_tau(add, x)) > 1e-3);
  CHECK(tensor(product_form).free_parameters() == kK * kKs);
}

TEST_CASE("every conditional variant yields valid generators across x") {
  Gen gen(9);
  Eigen::MatrixXd big(kK, kKs);
  for (int i = 0; i < kK; ++i)
    for (int j = 0; j < kKs; ++j) big(i, j) = 1.5 * gen.normal();
  const std::vector<ConditionalParams> variants{
      additive(normals(gen, kK, 1.5), {normals(gen, kKs, 1.5)}),
      flexpower(normals(gen, kK, 1.5), normals(gen, kKs, 1.5), normals(gen, kKs, 1.5)),
      tensor(big),
  };
  int violations = 0;
  for (const auto& cp : variants) {
    ConditionalGeneratorFactory factory(cp);
    for (int j = 0; j <= 100; ++j) {
      const std::vector<double> x{j / 100.0};
      const auto& g = factory.at(x);
      for (int i = 1; i < 100; ++i) {
        const auto ev = g.evaluate(i / 100.0);
        if (!(ev.phi > 0.0) || !(ev.phi_prime < 0.0) || !(ev.lambda < 0.0) ||
            !(ev.lambda_prime < 1.0)) {
          ++violations;
        }
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("conditional argument checks") {
  const auto cp = additive(std::vector<double>(kK, 1.0), {std::vector<double>(kKs, 0.0)});
  CHECK_THROWS_AS(conditional_coefficients(cp, std::vector<double>{1.2}), Error);
  CHECK_THROWS_AS(conditional_coefficients(cp, std::vector<double>{0.2, 0.3}), Error);
  const auto bad = additive(std::vector<double>(kK - 1, 1.0), {std::vector<double>(kKs, 0.0)});
  CHECK_THROWS_AS(conditional_coefficients(bad, std::vector<double>{0.2}), Error);
  try {
    conditional_coefficients(cp, std::vector<double>{-0.1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_range);
  }
}
