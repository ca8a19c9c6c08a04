#pragma once

// Subgraph hotness over a set of SLO configurations and greedy preloading
// under a global memory budget.

#include <compare>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "loom/optimizer.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

struct SubgraphKey {
  int task_id = 0;
  int variant_index = 0;
  int position = 0;

  friend auto operator<=>(const SubgraphKey&, const SubgraphKey&) = default;
  friend bool operator==(const SubgraphKey&, const SubgraphKey&) = default;
};

struct HotnessTable {
  std::map<SubgraphKey, double> scores;  // keys never seen are implicitly 0
  int config_count = 0;

  double score(const SubgraphKey& key) const;
};

/// Feasible set of one task under one SLO configuration.
struct SatisfyingSet {
  int task_id = 0;
  int config_id = 0;
  std::vector<StitchMap> maps;
};

/// Flattens per-config feasible sets into satisfying sets.
std::vector<SatisfyingSet> satisfying_sets(std::span<const SloConfig> configs, std::span<const FeasibleSets> feasible);

/// H(s) = sum over configs of Occur(s, set) / |set|; empty sets add nothing.
/// config_count is the number of distinct config ids in `sets`.
HotnessTable compute_hotness(std::span<const SatisfyingSet> sets);

struct PreloadOptions {
  // Number of task-by-position sweeps. Each sweep admits at most one
  // subgraph per (task, position). 0 repeats until a sweep admits nothing.
  int max_sweeps = 0;
};

struct PreloadPlan {
  std::map<int, std::set<SubgraphKey>> per_task;
  Bytes total_mem_bytes = 0;
  Bytes budget_bytes = 0;

  bool contains(const SubgraphKey& key) const;
  std::size_t size() const;
};

PreloadPlan greedy_preload(const HotnessTable& hotness, const Zoo& zoo, Bytes budget_bytes,
                           const PreloadOptions& options = {});

/// Every subgraph of every variant resident; budget equals its footprint.
PreloadPlan full_preload(const Zoo& zoo);

/// floor(fraction * full_preload_memory). Fraction must lie in [0, 1].
Bytes budget_from_fraction(const Zoo& zoo, double fraction);

struct SwitchMultipliers {
  double compile_x = 23.7;
  double load_x = 3.0;
  bool charge_compile = true;

  double factor() const noexcept { return (charge_compile ? compile_x : 0.0) + load_x; }
};

/// Compile-and-load time for the subgraphs of `map` missing from `plan`,
/// each scaled from its inference latency on the processor in `placement`.
/// A null plan means nothing is resident.
double switch_cost(const StitchMap& map, std::span<const int> placement, const PreloadPlan* plan,
                   const ProfileTable& table, const SwitchMultipliers& multipliers = {});

}  // namespace loom
