#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "tweedie/calculus.hpp"
#include "tweedie/empirical_bayes.hpp"
#include "tweedie/engine.hpp"
#include "tweedie/identities.hpp"
#include "tweedie/model.hpp"

namespace {

using namespace tweedie;

std::shared_ptr<const Scenario> gaussian_conjugate(int nodes) {
  return std::make_shared<const Scenario>("gaussian_conjugate",
                                          make_model("GaussianKnownVariance", {{"variance", 1.0}}),
                                          ContinuousPrior{{normal_density(0.0, 1.0)}, nodes});
}

void BM_ConditionalExpectation(benchmark::State& state) {
  auto s = gaussian_conjugate(static_cast<int>(state.range(0)));
  const Vector y = Vector::Constant(1, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(conditional_expectation(*s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConditionalExpectation)->Arg(64)->Arg(256)->Arg(1024);

void BM_VerifyVariance(benchmark::State& state) {
  auto s = gaussian_conjugate(96);
  const Grid grid = Grid::stepped(-3.0, 3.0, 0.1);
  const IdentitySpec spec = parse_identity("Variance");
  for (auto _ : state) benchmark::DoNotOptimize(verify(spec, *s, grid, VerifyOptions{}));
}
BENCHMARK(BM_VerifyVariance)->Unit(benchmark::kMillisecond);

void BM_KdeDerivatives(benchmark::State& state) {
  auto s = gaussian_conjugate(96);
  const KernelDensityEstimate kde = kde_fit(draw_marginal_samples(*s, static_cast<std::size_t>(state.range(0)), 1));
  double y = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kde.derivatives(y, 2));
    y = y > 2.0 ? -2.0 : y + 0.01;
  }
}
BENCHMARK(BM_KdeDerivatives)->Arg(10000)->Arg(100000);

void BM_DOperator(benchmark::State& state) {
  auto model = make_model("GammaKnownRate", {{"rate", 1.0}});
  const ScalarFn f = [](double y) { return y * y * y; };
  const int ell = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(d_operator(f, *model, ell, 1.5, FdPolicy{}));
}
BENCHMARK(BM_DOperator)->DenseRange(1, 3);

}  // namespace

BENCHMARK_MAIN();
