#include <benchmark/benchmark.h>

#include "loom/errors.hpp"
#include "loom/experiments.hpp"
#include "loom/optimizer.hpp"
#include "loom/preloader.hpp"
#include "loom/simulator.hpp"
#include "loom/slo.hpp"

using namespace loom;

namespace {

struct Intel {
  ExperimentSpec spec;
  World world;
  std::vector<SloConfig> configs;

  Intel() : world(build_world(spec, 1, false)), configs(generate_slo_configs(world.zoo, world.table, world.orders)) {}
};

const Intel& intel() {
  static const Intel w;
  return w;
}

void BM_EnumerateStitched(benchmark::State& state) {
  const Task task{1, "t", static_cast<int>(state.range(0)), 3};
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_stitched(task));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * state.range(0));
}
BENCHMARK(BM_EnumerateStitched)->Arg(5)->Arg(10)->Arg(20);

void BM_PlanOneConfig(benchmark::State& state) {
  const Intel& w = intel();
  const TruthAccuracy acc(w.world.table);
  const ProfileLatency lat(w.world.table);
  const SloConfig& slo = w.configs[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(plan(w.world.zoo, acc, lat, slo, w.world.orders));
    } catch (const Error&) {
    }
  }
}
BENCHMARK(BM_PlanOneConfig)->Arg(0)->Arg(12)->Arg(24);

void BM_GreedyPreload(benchmark::State& state) {
  const Intel& w = intel();
  const TruthAccuracy acc(w.world.table);
  const ProfileLatency lat(w.world.table);
  std::vector<FeasibleSets> feasible;
  for (const SloConfig& c : w.configs) feasible.push_back(compute_feasible_sets(w.world.zoo, acc, lat, c, w.world.orders));
  const HotnessTable hotness = compute_hotness(satisfying_sets(w.configs, feasible));
  const Bytes budget = budget_from_fraction(w.world.zoo, static_cast<double>(state.range(0)) / 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_preload(hotness, w.world.zoo, budget));
}
BENCHMARK(BM_GreedyPreload)->Arg(15)->Arg(55)->Arg(100);

void BM_SimulateRun(benchmark::State& state) {
  const Intel& w = intel();
  const TruthAccuracy acc(w.world.table);
  const SelectionContext ctx{w.world.zoo, w.world.table, acc, w.world.orders, 0.0};
  const SloConfig& slo = w.configs[24];
  const auto sel = select_workload(Policy{PolicyKind::SV_LO_P, std::nullopt}, ctx, slo);
  const std::vector<int> arrival = w.world.zoo.task_ids();
  const int queries = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_run(sel, slo, w.world.table, nullptr, arrival, queries, SimOptions{}, 1));
  }
  state.SetItemsProcessed(state.iterations() * queries * static_cast<std::int64_t>(arrival.size()));
}
BENCHMARK(BM_SimulateRun)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
