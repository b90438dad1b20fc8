#include <doctest.h>

#include <cmath>
#include <limits>

#include "splinecop/error.hpp"
#include "splinecop/generator.hpp"
#include "splinecop/parametric.hpp"
#include "support.hpp"

using namespace splinecop;
using testsupport::Gen;

namespace {

std::shared_ptr<const BSplineBasis> basis11() { return make_generator_basis(11); }

std::vector<double> random_theta(Gen& gen, int k = 11, double scale = 2.0) {
  std::vector<double> t(k);
  for (auto& x : t) x = scale * gen.normal();
  return t;
}

}  // namespace

TEST_CASE("S transform and basis domain") {
  CHECK(transform_s(0.5) == doctest::Approx(-std::log(std::log(2.0))));
  CHECK(transform_s_inverse(transform_s(0.3)) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(transform_s_unchecked(1.0 - 1e-9) == doctest::Approx(-std::log(1e-9)).epsilon(1e-7));
  CHECK_THROWS_AS(transform_s(0.0), Error);
  const auto b = basis11();
  CHECK(b->lo() == doctest::Approx(-std::log(-std::log(1e-6))));
  CHECK(b->hi() == doctest::Approx(-std::log(-std::log1p(-1e-6))));
  CHECK(b->size() == 11);
}

TEST_CASE("unit coefficients give Gumbel with parameter 2") {
  const std::vector<double> ones(11, 1.0);
  const SplineGenerator g(basis11(), ones);
  const auto gumbel = make_reference(Family::gumbel, 2.0);
  Gen gen(1);
  for (int i = 0; i < 100; ++i) {
    const double u = gen.uniform();
    CHECK(g.lambda(u) == doctest::Approx(gumbel.lambda(u)).epsilon(1e-13));
    CHECK(g.lambda_prime(u) == doctest::Approx(gumbel.lambda_prime(u)).epsilon(1e-12));
    const double v = gen.uniform();
    CHECK(g.copula_cdf(u, v) == doctest::Approx(gumbel.copula_cdf(u, v)).epsilon(1e-12));
  }
  CHECK(g.kendall_tau() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero coefficients give independence") {
  const std::vector<double> zeros(11, 0.0);
  const SplineGenerator g(basis11(), zeros);
  CHECK(std::abs(g.kendall_tau()) < 1e-9);
  Gen gen(2);
  for (int i = 0; i < 50; ++i) {
    const double u = gen.uniform();
    const double v = gen.uniform();
    CHECK(g.lambda(u) == doctest::Approx(u * std::log(u)).epsilon(1e-14));
    CHECK(g.copula_cdf(u, v) == doctest::Approx(u * v).epsilon(1e-13));
  }
}

TEST_CASE("g, g' and g'' are consistent") {
  Gen gen(4);
  for (int rep = 0; rep < 20; ++rep) {
    const SplineGenerator g(basis11(), random_theta(gen));
    for (int i = 0; i < 20; ++i) {
      const double s = gen.uniform(-4.0, 16.0);
      const double h = 1e-5;
      CHECK(g.g_prime(s) == doctest::Approx((g.g(s + h) - g.g(s - h)) / (2 * h)).epsilon(1e-7));
      if (s > g.basis().lo() + h && s < g.basis().hi() - h) {
        CHECK(g.g_second(s) ==
              doctest::Approx((g.g_prime(s + h) - g.g_prime(s - h)) / (2 * h)).epsilon(1e-6));
      }
      CHECK(g.g_pair(s).g == g.g(s));
      CHECK(g.g_pair(s).g_prime == g.g_prime(s));
    }
    CHECK(g.g(g.basis().lo()) == 0.0);
  }
}

TEST_CASE("analytic lambda' matches finite differences") {
  Gen gen(6);
  for (int rep = 0; rep < 20; ++rep) {
    const SplineGenerator g(basis11(), random_theta(gen));
    for (int i = 0; i < 20; ++i) {
      const double u = gen.uniform(0.001, 0.999);
      CHECK(g.lambda_prime(u) == doctest::Approx(g.lambda_prime_fd(u)).epsilon(1e-6));
      const auto ev = g.evaluate(u);
      CHECK(ev.lambda_prime == g.lambda_prime_fd(u));
      CHECK(ev.phi_prime == doctest::Approx(ev.phi / ev.lambda));
    }
  }
}

TEST_CASE("generator is positive and strictly decreasing for random coefficients") {
  Gen gen(100);
  int violations = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const SplineGenerator g(basis11(), random_theta(gen, 11, 3.0));
    for (int i = 1; i < 10000; ++i) {
      const auto ev = g.evaluate(i / 10000.0, LambdaDerivative::analytic);
      if (!(ev.phi > 0.0) || !(ev.phi_prime < 0.0) || !(ev.lambda < 0.0)) ++violations;
    }
  }
  CHECK(violations == 0);
}

// Convexity: phi' must be nondecreasing along a 10^4-point grid. This is a
// known failure of the construction: near u -> 1 the condition reduces to
// g'' <= g'(g' - 1 - log u), which the rising edge of an upper B-spline
// breaks whenever its coefficient is nonzero (next test case).
TEST_CASE("generator convexity on random coefficient vectors") {
  Gen gen(100);
  int bad_vectors = 0;
  double worst_lambda_prime = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const SplineGenerator g(basis11(), random_theta(gen, 11, 1.0));
    double prev = -std::numeric_limits<double>::infinity();
    bool bad = false;
    for (int i = 1; i < 10000; ++i) {
      const auto ev = g.evaluate(i / 10000.0, LambdaDerivative::analytic);
      if (ev.phi_prime < prev) bad = true;
      prev = ev.phi_prime;
      worst_lambda_prime = std::max(worst_lambda_prime, ev.lambda_prime);
    }
    bad_vectors += bad ? 1 : 0;
  }
  MESSAGE("vectors with a nonconvex stretch: " << bad_vectors << ", max lambda' " << worst_lambda_prime);
  CHECK(bad_vectors == 0);
}

TEST_CASE("a single upper bump breaks convexity") {
  // A single bump on an upper basis function: lambda' exceeds 1 on its
  // rising edge, so phi'' < 0 there.
  std::vector<double> theta(11, 0.0);
  theta[7] = 0.5;
  const SplineGenerator g(basis11(), theta);
  double worst = 0.0;
  for (int i = 1; i < 10000; ++i) {
    worst = std::max(worst, g.evaluate(i / 10000.0).lambda_prime);
  }
  CHECK(worst > 1.0);
  // Constant coefficients stay convex (Gumbel family).
  const SplineGenerator gum(basis11(), std::vector<double>(11, 0.5));
  for (int i = 1; i < 1000; ++i) CHECK(gum.evaluate(i / 1000.0).lambda_prime <= 1.0 + 1e-12);
}

TEST_CASE("inversion round trip") {
  Gen gen(8);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const SplineGenerator g(basis11(), random_theta(gen));
    for (int i = 0; i < 40; ++i) {
      const double u = gen.uniform(1e-6, 1.0 - 1e-6);
      const auto r = g.invert(g.psi(u), gen.uniform());
      worst = std::max(worst, std::abs(r.u - u));
      CHECK(std::abs(r.residual) <= 1e-10);
      CHECK(r.iterations <= 50);
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("inversion failure is reported") {
  const std::vector<double> ones(11, 1.0);
  const SplineGenerator g(basis11(), ones);
  try {
    g.invert(std::nan(""), 0.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
  }
  try {
    g.invert(100.0, 0.5, 1e-12, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_convergence);
    CHECK(e.numerical());
  }
}

TEST_CASE("re-anchoring g leaves every copula quantity unchanged") {
  Gen gen(12);
  const auto theta = random_theta(gen);
  const SplineGenerator a(basis11(), theta);
  SplineGenerator b(basis11(), theta);
  b.set_anchor_shift(3.7);
  for (int i = 0; i < 30; ++i) {
    const double u = gen.uniform();
    const double v = gen.uniform();
    CHECK(b.copula_cdf(u, v) == doctest::Approx(a.copula_cdf(u, v)).epsilon(1e-12));
    CHECK(b.lambda(u) == doctest::Approx(a.lambda(u)).epsilon(1e-14));
    CHECK(log_copula_density(b, u, v).log_density ==
          doctest::Approx(log_copula_density(a, u, v).log_density).epsilon(1e-10));
  }
}

TEST_CASE("tau of a spline generator against adaptive quadrature") {
  Gen gen(14);
  for (int rep = 0; rep < 10; ++rep) {
    const auto theta = random_theta(gen, 11, 1.0);
    const SplineGenerator g(basis11(), theta);
    const double q = 1.0 + 4.0 * testsupport::adaptive_integral(
                                     [&](double u) { return g.lambda(u); }, 0.0, 1.0, 1e-12);
    CHECK(std::abs(g.kendall_tau() - q) <= 1e-6);
    CHECK(kendall_tau(GeneratorCoefficients::make(theta)) == g.kendall_tau());
  }
}

TEST_CASE("tau by quadrature matches closed-form Gumbel") {
  for (double th : {1.0, 1.25, 2.0, 3.0, 10.0}) {
    const auto g = make_reference(Family::gumbel, th);
    CHECK(std::abs(g.kendall_tau() - (th - 1.0) / th) <= 1e-8);
  }
}

TEST_CASE("coefficient validation") {
  CHECK_THROWS_AS(SplineGenerator(basis11(), std::vector<double>(10, 1.0)), Error);
  std::vector<double> bad(11, 1.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(SplineGenerator(basis11(), bad), Error);
  CHECK_THROWS_AS(SplineGenerator(basis11(), std::vector<double>(11, 1.0)).evaluate(1.0), Error);
}
