#pragma once

// Deterministic discrete-event simulation of closed-loop multi-task
// pipelines on heterogeneous processors, and the serving policies compared
// in it.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loom/optimizer.hpp"
#include "loom/preloader.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

enum class PolicyKind { SV_AO_P, SV_AO_NP, SV_LO_P, SV_LO_NP, AV_P, AV_NP, SPARSELOOM };

std::string_view to_string(PolicyKind kind) noexcept;
/// Accepts "SV_AO_P" and "SV-AO-P" spellings. Throws ErrorKind::parse.
PolicyKind parse_policy(std::string_view text);

struct Policy {
  PolicyKind kind = PolicyKind::SPARSELOOM;
  std::optional<PlacementOrder> fixed_order;  // partitioned baselines; default accelerator-first

  /// Variant split across processors (P baselines and SPARSELOOM).
  bool partitioned() const noexcept;
};

/// The six baselines followed by SPARSELOOM.
std::vector<Policy> all_policies();

/// Everything a policy may consult when choosing variants.
struct SelectionContext {
  const Zoo& zoo;
  const ProfileTable& table;
  const AccuracyModel& planner_accuracy;  // SPARSELOOM only; baselines use measured accuracy
  std::span<const PlacementOrder> orders;
  double comm_ms = 0.0;
};

struct TaskSelection {
  int task_id = 0;
  bool dispatched = false;           // false: no variant, every query is skipped
  bool planning_infeasible = false;  // no candidate met the SLO at planning time
  StitchMap map;
  std::vector<int> placement;        // processor per position
  double planned_latency_ms = 0.0;
};

/// Per-task selection for one SLO config. SV policies always dispatch; AV and
/// SPARSELOOM dispatch only SLO-satisfying choices. `plan_out` receives the
/// SPARSELOOM plan when one exists.
std::vector<TaskSelection> select_workload(const Policy& policy, const SelectionContext& ctx, const SloConfig& slo,
                                           PlanResult* plan_out = nullptr);

/// Single-task view of select_workload for the baselines. SPARSELOOM needs
/// the whole workload because the order is shared.
TaskSelection select_for_policy(const Policy& policy, int task_id, const SelectionContext& ctx, const SloConfig& slo);

/// Every ordering of `ids`, lexicographic.
std::vector<std::vector<int>> all_permutations(std::vector<int> ids);

struct WorkloadSpec {
  std::vector<int> task_ids;
  int queries_per_task = 100;
  std::vector<std::vector<int>> arrival_permutations;  // empty: all T!
};

struct SimOptions {
  double hop_cost_ms = 0.0;       // unmodelled transfer delay between stages, simulator only
  double runtime_jitter = 0.0;    // stage time scaled by U[1-j, 1+j]
  SwitchMultipliers switch_multipliers;
  bool charge_switch = true;
  bool record_trace = false;
};

struct StageRecord {
  int task_id = 0;
  int query = 0;  // 1-based
  int stage = 0;  // 1-based position
  int proc_id = 0;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

struct TaskOutcome {
  int task_id = 0;
  int completed = 0;
  double mean_latency_ms = 0.0;
  std::vector<double> query_latency_ms;
  bool violated = false;
};

struct RunResult {
  double violation_rate = 0.0;
  double throughput_qps = 0.0;
  double mean_latency_ms = 0.0;
  double makespan_ms = 0.0;
  int infeasible_tasks = 0;
  std::vector<TaskOutcome> tasks;  // in arrival order
  std::vector<StageRecord> trace;
};

/// Ground-truth accuracy of a map: measured accuracy for constant donor
/// vectors, stitched truth otherwise.
double true_accuracy(const ProfileTable& table, const StitchMap& map);

/// One run. Tasks release their first query at t=0 in `arrival` order and keep
/// one query in flight. `preload` null means every subgraph is resident.
/// Throws ErrorKind::inconsistent_plan for selections the table cannot serve.
RunResult simulate_run(std::span<const TaskSelection> selections, const SloConfig& slo, const ProfileTable& table,
                       const PreloadPlan* preload, std::span<const int> arrival, int queries_per_task,
                       const SimOptions& options, std::uint64_t seed);

struct SimRow {
  PolicyKind policy = PolicyKind::SPARSELOOM;
  int config_id = 0;
  int permutation_index = 0;
  std::uint64_t seed = 0;
  double violation_rate = 0.0;
  double throughput_qps = 0.0;
  double mean_latency_ms = 0.0;
  int infeasible_tasks = 0;
};

struct SimReport {
  std::vector<SimRow> rows;
};

/// Every (policy, config, permutation) run. Baselines keep every variant
/// resident; `sparseloom_preload` (null: everything) applies to SPARSELOOM.
SimReport run_simulation(const WorkloadSpec& workload, std::span<const Policy> policies,
                         std::span<const SloConfig> configs, const SelectionContext& ctx,
                         const PreloadPlan* sparseloom_preload, const SimOptions& options, std::uint64_t seed);

struct SummaryRow {
  PolicyKind policy = PolicyKind::SPARSELOOM;
  int config_id = 0;
  int runs = 0;
  double violation_rate = 0.0;
  double throughput_qps = 0.0;
};

/// Mean over permutations (and seeds) per (policy, config), ordered by
/// policy then config id.
std::vector<SummaryRow> aggregate(const SimReport& report);

}  // namespace loom
