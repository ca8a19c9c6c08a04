#pragma once

// Joint selection of a global processor placement order and one stitched
// variant per task under per-task accuracy/latency SLOs.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "loom/estimator.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

struct TaskSlo {
  double acc_floor = 0.0;
  double lat_ceiling_ms = 0.0;
};

struct SloConfig {
  int config_id = 0;
  std::map<int, TaskSlo> per_task;

  /// Throws ErrorKind::missing_key.
  const TaskSlo& at(int task_id) const;
};

class LatencyModel {
 public:
  virtual ~LatencyModel() = default;
  virtual double latency(const StitchMap& map, const PlacementOrder& order) const = 0;
};

class AccuracyModel {
 public:
  virtual ~AccuracyModel() = default;
  virtual double accuracy(const StitchMap& map) const = 0;
};

/// Sum of profiled subgraph latencies plus a per-hop constant.
class ProfileLatency final : public LatencyModel {
 public:
  explicit ProfileLatency(const ProfileTable& table, double comm_ms = 0.0) : table_(table), comm_ms_(comm_ms) {}
  double latency(const StitchMap& map, const PlacementOrder& order) const override {
    return estimate_latency(map, order, table_, comm_ms_);
  }

 private:
  const ProfileTable& table_;
  double comm_ms_;
};

/// End-to-end latencies read from an order/variant fixture. Donor index i
/// and processor id p map to letters via the supplied alphabets, e.g.
/// variants "DPQ" and processors "CGN".
class FixtureLatency final : public LatencyModel {
 public:
  FixtureLatency(OrderLatencyFixture fixture, std::string variant_letters, std::string processor_letters);
  double latency(const StitchMap& map, const PlacementOrder& order) const override;

  StitchMap map_for(int task_id, std::string_view variant_label) const;
  PlacementOrder order_for(std::string_view order_label) const;
  std::string order_label(const PlacementOrder& order) const;

 private:
  OrderLatencyFixture fixture_;
  std::string variant_letters_;
  std::string processor_letters_;
};

/// Ground-truth accuracy of every stitched variant.
class TruthAccuracy final : public AccuracyModel {
 public:
  explicit TruthAccuracy(const ProfileTable& table) : table_(table) {}
  double accuracy(const StitchMap& map) const override { return table_.stitched_truth(map); }

 private:
  const ProfileTable& table_;
};

/// Estimator predictions for stitched variants. Original (constant-donor)
/// variants were profiled directly, so their measured accuracy is returned.
class PredictedAccuracy final : public AccuracyModel {
 public:
  PredictedAccuracy(const ProfileTable& table, std::map<int, AccuracyEstimator> estimators)
      : table_(table), estimators_(std::move(estimators)) {}
  double accuracy(const StitchMap& map) const override;

 private:
  const ProfileTable& table_;
  std::map<int, AccuracyEstimator> estimators_;
};

using FeasibleSets = std::map<int, std::vector<StitchMap>>;

/// Candidates meeting the accuracy floor that also meet the latency ceiling
/// under at least one order.
std::vector<StitchMap> filter_feasible(std::span<const StitchMap> candidates, const AccuracyModel& accuracy,
                                       const LatencyModel& latency, const TaskSlo& slo,
                                       std::span<const PlacementOrder> orders);

struct OrderChoice {
  PlacementOrder order;
  double mean_latency_ms = 0.0;  // objective: mean over tasks with non-empty sets
};

/// Mean objective of one order; nullopt when every set is empty.
std::optional<double> order_objective(const FeasibleSets& feasible, const LatencyModel& latency,
                                      const PlacementOrder& order);

/// argmin of the objective over `orders`, ties to the lexicographically lower
/// processor sequence. Throws ErrorKind::all_infeasible.
OrderChoice choose_order(const FeasibleSets& feasible, const LatencyModel& latency,
                         std::span<const PlacementOrder> orders);

enum class ChoiceStatus { chosen, no_feasible_variant, infeasible_under_order };

std::string_view to_string(ChoiceStatus status) noexcept;

struct TaskChoice {
  ChoiceStatus status = ChoiceStatus::no_feasible_variant;
  std::optional<StitchMap> map;
  double latency_ms = 0.0;

  bool feasible() const noexcept { return status == ChoiceStatus::chosen; }
};

/// Minimum-latency feasible map per task under `order` (ties: lower donor
/// vector). A map whose latency under `order` breaks the task's ceiling is
/// reported as infeasible_under_order.
std::map<int, TaskChoice> select_final_variants(const FeasibleSets& feasible, const LatencyModel& latency,
                                                const PlacementOrder& order, const SloConfig& slo);

struct PlanResult {
  int config_id = 0;
  PlacementOrder best_order;
  std::map<int, TaskChoice> per_task;
  double objective_ms = 0.0;     // L(p*), the quantity the order search minimises
  double mean_latency_ms = 0.0;  // mean over tasks whose choice survived re-validation
  int empty_feasible_tasks = 0;  // planning-stage infeasibility

  int infeasible_tasks() const;
};

enum class CandidateSet { stitched, original };

FeasibleSets compute_feasible_sets(const Zoo& zoo, const AccuracyModel& accuracy, const LatencyModel& latency,
                                   const SloConfig& slo, std::span<const PlacementOrder> orders,
                                   CandidateSet candidates = CandidateSet::stitched);

/// Filter, order choice and final selection. Throws ErrorKind::all_infeasible
/// when no task has a feasible candidate.
PlanResult plan(const Zoo& zoo, const AccuracyModel& accuracy, const LatencyModel& latency, const SloConfig& slo,
                std::span<const PlacementOrder> orders, CandidateSet candidates = CandidateSet::stitched);

/// Same as plan() from precomputed feasible sets.
PlanResult plan_from_feasible(const FeasibleSets& feasible, const LatencyModel& latency, const SloConfig& slo,
                              std::span<const PlacementOrder> orders);

/// Result for a config no task can meet: every task marked infeasible.
PlanResult empty_plan(const FeasibleSets& feasible, int config_id);

}  // namespace loom
