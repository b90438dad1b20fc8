#include <benchmark/benchmark.h>

#include <vector>

#include "splinecop/generator.hpp"
#include "splinecop/harness.hpp"
#include "splinecop/parametric.hpp"
#include "splinecop/posterior.hpp"

using namespace splinecop;

namespace {

std::vector<double> wiggly_theta() {
  return {0.4, -0.9, 1.3, 0.2, -0.6, 1.1, 0.8, -0.3, 0.5, 0.9, -1.2};
}

void BM_GeneratorEvaluate(benchmark::State& state) {
  const SplineGenerator g(make_generator_basis(11), wiggly_theta());
  double u = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.evaluate(u, LambdaDerivative::analytic));
    u = u > 0.98 ? 0.01 : u + 0.0137;
  }
}
BENCHMARK(BM_GeneratorEvaluate);

void BM_GeneratorInvert(benchmark::State& state) {
  const SplineGenerator g(make_generator_basis(11), wiggly_theta());
  std::vector<double> targets;
  for (int i = 1; i < 100; ++i) targets.push_back(g.psi(i / 100.0));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.invert(targets[k], 0.25));
    k = (k + 1) % targets.size();
  }
}
BENCHMARK(BM_GeneratorInvert);

void BM_KendallTau(benchmark::State& state) {
  const SplineGenerator g(make_generator_basis(11), wiggly_theta());
  for (auto _ : state) benchmark::DoNotOptimize(g.kendall_tau());
}
BENCHMARK(BM_KendallTau);

void BM_LogLikelihoodUnconditional(benchmark::State& state) {
  const auto data = sample_data(Family::clayton, TauFunction::constant(0.3),
                                static_cast<int>(state.range(0)), 1);
  const CopulaModel model(ModelSpec{});
  const auto theta = wiggly_theta();
  for (auto _ : state) benchmark::DoNotOptimize(model.log_likelihood(theta, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihoodUnconditional)->Arg(500)->Arg(2000);

void BM_LogLikelihoodFlexPower(benchmark::State& state) {
  RunConfig c;
  c.simulate.family = Family::frank;
  c.simulate.tau = TauFunction::sine();
  c.simulate.n = static_cast<int>(state.range(0));
  const auto data = simulate_data(c);
  c.model = ModelKind::flexpower;
  const CopulaModel model(c.model_spec(1));
  const auto params = initial_params(model, data);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_likelihood(params, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihoodFlexPower)->Arg(500)->Arg(2000);

void BM_FitUnconditional(benchmark::State& state) {
  const auto data = sample_data(Family::gumbel, TauFunction::constant(0.45), 500, 3);
  const CopulaModel model(ModelSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(fit_model(model, data));
}
BENCHMARK(BM_FitUnconditional)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
