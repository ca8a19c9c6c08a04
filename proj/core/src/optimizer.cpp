#include "loom/optimizer.hpp"

#include <algorithm>
#include <limits>

#include "loom/errors.hpp"

namespace loom {

const TaskSlo& SloConfig::at(int task_id) const {
  auto it = per_task.find(task_id);
  if (it == per_task.end()) {
    throw Error(ErrorKind::missing_key, "SLO config " + std::to_string(config_id) + " has no entry for task " +
                                            std::to_string(task_id));
  }
  return it->second;
}

FixtureLatency::FixtureLatency(OrderLatencyFixture fixture, std::string variant_letters, std::string processor_letters)
    : fixture_(std::move(fixture)),
      variant_letters_(std::move(variant_letters)),
      processor_letters_(std::move(processor_letters)) {}

double FixtureLatency::latency(const StitchMap& map, const PlacementOrder& order) const {
  std::string v, o;
  for (std::size_t j = 0; j < map.donors.size(); ++j) {
    const auto d = static_cast<std::size_t>(map.donors[j] - 1);
    if (d >= variant_letters_.size()) throw Error(ErrorKind::missing_key, "fixture has no variant " + format_donors(map));
    if (j) v += '-';
    v += variant_letters_[d];
  }
  return fixture_.lookup(v, order_label(order));
}

StitchMap FixtureLatency::map_for(int task_id, std::string_view variant_label) const {
  StitchMap m{task_id, {}};
  for (char c : variant_label) {
    if (c == '-') continue;
    const auto pos = variant_letters_.find(c);
    if (pos == std::string::npos) throw Error(ErrorKind::parse, "unknown variant letter in " + std::string(variant_label));
    m.donors.push_back(static_cast<int>(pos) + 1);
  }
  return m;
}

PlacementOrder FixtureLatency::order_for(std::string_view order_label) const {
  PlacementOrder o;
  for (char c : order_label) {
    if (c == '-') continue;
    const auto pos = processor_letters_.find(c);
    if (pos == std::string::npos) throw Error(ErrorKind::parse, "unknown processor letter in " + std::string(order_label));
    o.procs.push_back(static_cast<int>(pos) + 1);
  }
  return o;
}

std::string FixtureLatency::order_label(const PlacementOrder& order) const {
  std::string o;
  for (std::size_t j = 0; j < order.procs.size(); ++j) {
    const auto p = static_cast<std::size_t>(order.procs[j] - 1);
    if (p >= processor_letters_.size()) throw Error(ErrorKind::missing_key, "fixture has no processor " + std::to_string(order.procs[j]));
    if (j) o += '-';
    o += processor_letters_[p];
  }
  return o;
}

double PredictedAccuracy::accuracy(const StitchMap& map) const {
  if (map.is_constant()) return table_.variant_accuracy(map.task_id, map.donors.front());
  auto it = estimators_.find(map.task_id);
  if (it == estimators_.end()) {
    throw Error(ErrorKind::missing_key, "no accuracy estimator for task " + std::to_string(map.task_id));
  }
  return it->second.predict(extract_features(map, table_));
}

std::vector<StitchMap> filter_feasible(std::span<const StitchMap> candidates, const AccuracyModel& accuracy,
                                       const LatencyModel& latency, const TaskSlo& slo,
                                       std::span<const PlacementOrder> orders) {
  if (orders.empty()) throw Error(ErrorKind::invalid_argument, "filter_feasible needs at least one placement order");
  std::vector<StitchMap> out;
  for (const StitchMap& m : candidates) {
    if (accuracy.accuracy(m) < slo.acc_floor) continue;
    const bool fits = std::any_of(orders.begin(), orders.end(),
                                  [&](const PlacementOrder& o) { return latency.latency(m, o) <= slo.lat_ceiling_ms; });
    if (fits) out.push_back(m);
  }
  return out;
}

std::optional<double> order_objective(const FeasibleSets& feasible, const LatencyModel& latency,
                                      const PlacementOrder& order) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& [task_id, maps] : feasible) {
    if (maps.empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const StitchMap& m : maps) best = std::min(best, latency.latency(m, order));
    sum += best;
    ++counted;
  }
  if (counted == 0) return std::nullopt;
  return sum / counted;
}

OrderChoice choose_order(const FeasibleSets& feasible, const LatencyModel& latency,
                         std::span<const PlacementOrder> orders) {
  if (orders.empty()) throw Error(ErrorKind::invalid_argument, "choose_order needs at least one placement order");
  std::optional<OrderChoice> best;
  for (const PlacementOrder& o : orders) {
    const auto value = order_objective(feasible, latency, o);
    if (!value) throw Error(ErrorKind::all_infeasible, "no task has a feasible variant");
    if (!best || *value < best->mean_latency_ms || (*value == best->mean_latency_ms && o < best->order)) {
      best = OrderChoice{o, *value};
    }
  }
  return *best;
}

std::string_view to_string(ChoiceStatus status) noexcept {
  switch (status) {
    case ChoiceStatus::chosen: return "chosen";
    case ChoiceStatus::no_feasible_variant: return "infeasible";
    case ChoiceStatus::infeasible_under_order: return "infeasible_under_order";
  }
  return "infeasible";
}

std::map<int, TaskChoice> select_final_variants(const FeasibleSets& feasible, const LatencyModel& latency,
                                                const PlacementOrder& order, const SloConfig& slo) {
  std::map<int, TaskChoice> out;
  for (const auto& [task_id, maps] : feasible) {
    TaskChoice choice;
    for (const StitchMap& m : maps) {
      const double lat = latency.latency(m, order);
      if (!choice.map || lat < choice.latency_ms || (lat == choice.latency_ms && m < *choice.map)) {
        choice.map = m;
        choice.latency_ms = lat;
      }
    }
    if (!choice.map) {
      choice.status = ChoiceStatus::no_feasible_variant;
    } else if (choice.latency_ms > slo.at(task_id).lat_ceiling_ms) {
      choice.status = ChoiceStatus::infeasible_under_order;
    } else {
      choice.status = ChoiceStatus::chosen;
    }
    out.emplace(task_id, std::move(choice));
  }
  return out;
}

int PlanResult::infeasible_tasks() const {
  return static_cast<int>(std::count_if(per_task.begin(), per_task.end(), [](const auto& kv) { return !kv.second.feasible(); }));
}

FeasibleSets compute_feasible_sets(const Zoo& zoo, const AccuracyModel& accuracy, const LatencyModel& latency,
                                   const SloConfig& slo, std::span<const PlacementOrder> orders,
                                   CandidateSet candidates) {
  FeasibleSets out;
  for (const TaskZoo& tz : zoo.tasks()) {
    const auto maps = candidates == CandidateSet::stitched ? enumerate_stitched(tz.task) : enumerate_original(tz.task);
    out[tz.task.task_id] = filter_feasible(maps, accuracy, latency, slo.at(tz.task.task_id), orders);
  }
  return out;
}

PlanResult plan_from_feasible(const FeasibleSets& feasible, const LatencyModel& latency, const SloConfig& slo,
                              std::span<const PlacementOrder> orders) {
  PlanResult result;
  result.config_id = slo.config_id;
  result.empty_feasible_tasks =
      static_cast<int>(std::count_if(feasible.begin(), feasible.end(), [](const auto& kv) { return kv.second.empty(); }));
  const OrderChoice choice = choose_order(feasible, latency, orders);
  result.best_order = choice.order;
  result.objective_ms = choice.mean_latency_ms;
  result.per_task = select_final_variants(feasible, latency, choice.order, slo);
  double sum = 0.0;
  int counted = 0;
  for (const auto& [task_id, c] : result.per_task) {
    if (!c.feasible()) continue;
    sum += c.latency_ms;
    ++counted;
  }
  result.mean_latency_ms = counted ? sum / counted : 0.0;
  return result;
}

PlanResult empty_plan(const FeasibleSets& feasible, int config_id) {
  PlanResult result;
  result.config_id = config_id;
  result.empty_feasible_tasks = static_cast<int>(feasible.size());
  for (const auto& [task_id, maps] : feasible) result.per_task[task_id] = TaskChoice{};
  return result;
}

PlanResult plan(const Zoo& zoo, const AccuracyModel& accuracy, const LatencyModel& latency, const SloConfig& slo,
                std::span<const PlacementOrder> orders, CandidateSet candidates) {
  return plan_from_feasible(compute_feasible_sets(zoo, accuracy, latency, slo, orders, candidates), latency, slo, orders);
}

}  // namespace loom
