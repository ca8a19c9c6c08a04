#pragma once

// Canned experiment recipes: SLO sweeps across all policies, memory-budget
// sweeps, placement-order sensitivity, profiling-cost curves and estimator
// evaluation. Each produces an in-memory bundle of files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "loom/estimator.hpp"
#include "loom/io.hpp"
#include "loom/optimizer.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

enum class ZooTemplate { intel_appendixA, jetson_appendixA, custom };
enum class Sweep { slo25, acc_guaranteed, lat_guaranteed, budget, order_sensitivity, profiling_cost, estimator_eval };

std::string_view to_string(ZooTemplate t) noexcept;
std::string_view to_string(Sweep s) noexcept;
ZooTemplate parse_zoo_template(std::string_view text);
Sweep parse_sweep(std::string_view text);

struct ExperimentSpec {
  std::string name = "experiment";
  ZooTemplate zoo_template = ZooTemplate::intel_appendixA;
  int T = 4;
  int V = 10;
  int S = 3;
  int P = 3;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> budgets{0.15, 0.35, 0.55, 0.75, 1.0};
  Sweep sweep = Sweep::slo25;
  int queries = 100;
  int permutations = 0;        // 0: all T! arrival orders, else the first N
  double sigma_acc = 0.5;
  int train_n = 50;
  bool use_truth = false;      // drive planning with ground-truth accuracy
  double comm_ms = 0.0;        // per-hop cost known to the planner
  double hop_cost_frac = 0.02; // estimator_eval: unmodelled hop cost, fraction of mean stage latency
  double preload_budget = 1.0; // SLO sweeps: SPARSELOOM preload budget fraction
  double compile_x = 23.7;
  double load_x = 3.0;

  /// Throws ErrorKind::invalid_argument.
  void validate() const;
};

/// Missing fields take the defaults above; template zoos fix T, V and S.
ExperimentSpec parse_experiment_spec(const std::string& json_text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

/// Synthetic world of one seed.
struct World {
  std::uint64_t seed = 0;
  Zoo zoo;
  ProfileTable table;
  std::vector<PlacementOrder> orders;
  std::map<int, AccuracyEstimator> estimators;  // empty when planning uses truth
};

Zoo make_zoo(const ExperimentSpec& spec);
GenParams make_gen_params(const ExperimentSpec& spec);
World build_world(const ExperimentSpec& spec, std::uint64_t seed, bool train_estimators);

/// One accuracy estimator per task, trained on `train_n` sampled stitched variants.
std::map<int, AccuracyEstimator> train_estimators(const Zoo& zoo, const ProfileTable& table, int train_n,
                                                  std::uint64_t seed);

/// End-to-end latency of a single query run alone in the simulator.
double simulate_single_query(const StitchMap& map, std::span<const int> placement, const ProfileTable& table,
                             double hop_cost_ms = 0.0);

/// Mean latency of every (subgraph, processor) entry.
double mean_stage_latency(const ProfileTable& table);

struct BudgetRow {
  std::uint64_t seed = 0;
  double budget_frac = 0.0;  // negative marks the full-preload reference
  Bytes preloaded_bytes = 0;
  std::size_t preloaded_subgraphs = 0;
  double violation_rate = 0.0;
  double throughput_qps = 0.0;
};

struct InfeasibleRow {
  std::uint64_t seed = 0;
  int config_id = 0;
  PolicyKind policy = PolicyKind::SPARSELOOM;
  int planning_infeasible = 0;
};

struct BundleFile {
  std::string path;  // relative to the bundle root
  std::string contents;
};

struct ExperimentBundle {
  std::vector<BundleFile> files;  // sorted by path
  SimReport report;
  std::vector<BudgetRow> budget_rows;
  std::vector<InfeasibleRow> infeasible_rows;
  std::vector<RecallRow> recall_rows;
  std::vector<LatencyErrorRow> latency_error_rows;

  const BundleFile* find(std::string_view path) const;
};

/// Seeds run in parallel; results merge in seed order so the bundle does not
/// depend on scheduling.
ExperimentBundle run_experiment(const ExperimentSpec& spec);

void write_bundle(const ExperimentBundle& bundle, const std::filesystem::path& out_dir);

}  // namespace loom
