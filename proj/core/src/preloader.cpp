#include "loom/preloader.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loom/checked.hpp"
#include "loom/errors.hpp"

namespace loom {

double HotnessTable::score(const SubgraphKey& key) const {
  auto it = scores.find(key);
  return it == scores.end() ? 0.0 : it->second;
}

std::vector<SatisfyingSet> satisfying_sets(std::span<const SloConfig> configs, std::span<const FeasibleSets> feasible) {
  if (configs.size() != feasible.size()) {
    throw Error(ErrorKind::length_mismatch, "one feasible-set map is needed per SLO config");
  }
  std::vector<SatisfyingSet> out;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (const auto& [task_id, maps] : feasible[c]) out.push_back({task_id, configs[c].config_id, maps});
  }
  return out;
}

HotnessTable compute_hotness(std::span<const SatisfyingSet> sets) {
  HotnessTable h;
  std::set<int> configs;
  for (const SatisfyingSet& s : sets) {
    configs.insert(s.config_id);
    if (s.maps.empty()) continue;
    std::map<SubgraphKey, int> occur;
    for (const StitchMap& m : s.maps) {
      for (std::size_t j = 0; j < m.donors.size(); ++j) {
        ++occur[SubgraphKey{s.task_id, m.donors[j], static_cast<int>(j) + 1}];
      }
    }
    const double n = static_cast<double>(s.maps.size());
    for (const auto& [key, count] : occur) h.scores[key] += count / n;
  }
  h.config_count = static_cast<int>(configs.size());
  return h;
}

bool PreloadPlan::contains(const SubgraphKey& key) const {
  auto it = per_task.find(key.task_id);
  return it != per_task.end() && it->second.contains(key);
}

std::size_t PreloadPlan::size() const {
  std::size_t n = 0;
  for (const auto& [t, keys] : per_task) n += keys.size();
  return n;
}

PreloadPlan greedy_preload(const HotnessTable& hotness, const Zoo& zoo, Bytes budget_bytes,
                           const PreloadOptions& options) {
  if (options.max_sweeps < 0) throw Error(ErrorKind::invalid_argument, "max_sweeps must be >= 0");
  PreloadPlan plan;
  plan.budget_bytes = budget_bytes;
  for (const TaskZoo& tz : zoo.tasks()) plan.per_task[tz.task.task_id];

  // Candidate order per (task, position) never changes between sweeps.
  struct Slot {
    int task_id;
    int position;
    std::vector<const Subgraph*> ranked;
  };
  std::vector<Slot> slots;
  for (const TaskZoo& tz : zoo.tasks()) {
    for (int j = 1; j <= tz.task.subgraph_count; ++j) {
      Slot slot{tz.task.task_id, j, {}};
      for (const SparseVariant& v : tz.variants) slot.ranked.push_back(&v.subgraphs[static_cast<std::size_t>(j - 1)]);
      std::stable_sort(slot.ranked.begin(), slot.ranked.end(), [&](const Subgraph* a, const Subgraph* b) {
        return hotness.score({a->task_id, a->variant_index, a->position}) >
               hotness.score({b->task_id, b->variant_index, b->position});
      });
      slots.push_back(std::move(slot));
    }
  }

  for (int sweep = 0; options.max_sweeps == 0 || sweep < options.max_sweeps; ++sweep) {
    bool admitted_any = false;
    for (const Slot& slot : slots) {
      auto& phi = plan.per_task[slot.task_id];
      for (const Subgraph* s : slot.ranked) {
        const SubgraphKey key{s->task_id, s->variant_index, s->position};
        if (phi.contains(key)) continue;
        if (s->mem_bytes > budget_bytes - plan.total_mem_bytes) continue;
        phi.insert(key);
        plan.total_mem_bytes += s->mem_bytes;
        admitted_any = true;
        break;
      }
    }
    if (!admitted_any) break;
  }
  return plan;
}

PreloadPlan full_preload(const Zoo& zoo) {
  PreloadPlan plan;
  for (const TaskZoo& tz : zoo.tasks()) {
    auto& phi = plan.per_task[tz.task.task_id];
    for (const SparseVariant& v : tz.variants) {
      for (const Subgraph& s : v.subgraphs) {
        phi.insert({s.task_id, s.variant_index, s.position});
        plan.total_mem_bytes = checked_add(plan.total_mem_bytes, s.mem_bytes, "full preload memory");
      }
    }
  }
  plan.budget_bytes = plan.total_mem_bytes;
  return plan;
}

Bytes budget_from_fraction(const Zoo& zoo, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "budget fraction must lie in [0,1], got " + std::to_string(fraction));
  }
  const Bytes full = full_preload_memory(zoo);
  if (fraction == 1.0) return full;
  return static_cast<Bytes>(std::floor(static_cast<long double>(full) * fraction));
}

double switch_cost(const StitchMap& map, std::span<const int> placement, const PreloadPlan* plan,
                   const ProfileTable& table, const SwitchMultipliers& multipliers) {
  if (placement.size() != map.donors.size()) {
    throw Error(ErrorKind::dimension_mismatch, "placement has " + std::to_string(placement.size()) +
                                                   " processors for " + std::to_string(map.donors.size()) +
                                                   " subgraphs");
  }
  double cost = 0.0;
  for (std::size_t j = 0; j < map.donors.size(); ++j) {
    const int position = static_cast<int>(j) + 1;
    if (plan && plan->contains({map.task_id, map.donors[j], position})) continue;
    cost += multipliers.factor() * table.latency(map.task_id, map.donors[j], position, placement[j]);
  }
  return cost;
}

}  // namespace loom
