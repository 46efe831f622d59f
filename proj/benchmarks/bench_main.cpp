#include <benchmark/benchmark.h>

#include <random>

#include "neyman/contrast.hpp"
#include "neyman/estimators.hpp"
#include "neyman/imputation.hpp"
#include "neyman/simulation.hpp"

using namespace neyman;

namespace {

PotentialOutcomes table(int n, std::uint64_t seed) { return gen_outcomes(OutcomeModel::heterogeneous(-5, 5), n, seed); }

void BM_EnumerateCrd(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        std::uint64_t count = 0;
        for_each_combination(n, n / 2, [&](std::uint64_t bits) { count += bits & 1; });
        benchmark::DoNotOptimize(count);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(binomial(n, n / 2)));
}
BENCHMARK(BM_EnumerateCrd)->Arg(12)->Arg(16)->Arg(20);

void BM_PsiEnumerated(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Design d = build_crd(n, n / 2);
    auto c = c_vector(table(n, 1), d.propensities());
    for (auto _ : state) benchmark::DoNotOptimize(psi(d, c));
}
BENCHMARK(BM_PsiEnumerated)->Arg(8)->Arg(12)->Arg(16);

void BM_PsiQuadraticForm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Design d = build_crd(n, n / 2);
    PsiForm form(d);
    auto c = c_vector(table(n, 1), d.propensities());
    for (auto _ : state) benchmark::DoNotOptimize(form(c));
}
BENCHMARK(BM_PsiQuadraticForm)->Arg(8)->Arg(12)->Arg(16);

void BM_ContrastFullSubstitutes(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Design d = build_crd(n, n / 2);
    auto g = full_substitute_map(d, SubstituteMode::equal_size);
    auto obs = reveal(table(n, 2), d.support().front().w);
    for (auto _ : state) benchmark::DoNotOptimize(v_sub(d, obs, g).value);
}
BENCHMARK(BM_ContrastFullSubstitutes)->Arg(8)->Arg(12);

void BM_ImputationMonteCarlo(benchmark::State& state) {
    BuildOptions opts;
    opts.enumeration_cap = 1;
    Design d = build_crd(50, 25, opts);
    auto obs = reveal(table(50, 3), sample_assignment(d, 4));
    const auto m = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(v_imputation_mc(d, obs, GammaSpec::tau_hat(), m, 5).value);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_ImputationMonteCarlo)->Arg(10'000)->Arg(100'000);

}  // namespace
BENCHMARK_MAIN();
