#include "mortboost/boost_backtest.hpp"
#include "mortboost/lc_model.hpp"
#include "mortboost/parallel.hpp"
#include "mortboost/synth_oracle.hpp"

#include <benchmark/benchmark.h>

using namespace mortboost;

namespace {

SimConfig grid(int ages, int years) {
    SimConfig cfg;
    cfg.seed = 42;
    cfg.ages = {0, ages - 1};
    cfg.years = {2000 - years + 1, 2000};
    cfg.exposure = 1e5;
    cfg.log_q_level = -6.0;
    return cfg;
}

void BM_SampleDeaths(benchmark::State &state) {
    const auto spec = build_sim_spec(grid(100, static_cast<int>(state.range(0))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_deaths(spec).total_deaths());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.q.space().size()));
}
BENCHMARK(BM_SampleDeaths)->Arg(20)->Arg(140);

void BM_FitLc(benchmark::State &state) {
    const auto spec = build_sim_spec(grid(static_cast<int>(state.range(0)), 50));
    const auto table = sample_deaths(spec);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_lc(table, Gender::female).report.iterations);
    }
}
BENCHMARK(BM_FitLc)->Arg(20)->Arg(98)->Unit(benchmark::kMillisecond);

// Tree growth on a perturbed surface; the thread count is the second argument.
void BM_GrowTree(benchmark::State &state) {
    auto cfg = grid(98, static_cast<int>(state.range(0)));
    const auto q_init = build_sim_spec(cfg).q;
    cfg.shock_years = IntRange{1990, 1992};
    cfg.shock_factor = 1.5;
    const auto table = sample_deaths(build_sim_spec(cfg));
    const auto working = make_working_data(q_init, table);
    TreeConfig tree_cfg;
    tree_cfg.min_bucket = 5;
    tree_cfg.cp = 1e-4;
    const ScopedThreadCount threads(static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(grow_tree(working.points, tree_cfg).leaf_count());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(working.points.size()));
}
BENCHMARK(BM_GrowTree)->Args({40, 1})->Args({139, 1})->Args({139, 4})->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
