#pragma once

// File formats: JSON for zoos, profiles, SLO configs, plans and preload
// plans; CSV for reports. Doubles are written in shortest round-trip form so
// reruns are byte-identical.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "loom/estimator.hpp"
#include "loom/optimizer.hpp"
#include "loom/preloader.hpp"
#include "loom/profiles.hpp"
#include "loom/simulator.hpp"
#include "loom/zoo.hpp"

namespace loom {

std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string zoo_to_json(const Zoo& zoo);
Zoo zoo_from_json(const std::string& text);

std::string gen_params_to_json(const GenParams& params);
GenParams gen_params_from_json(const std::string& text);

std::string profiles_to_json(const ProfileTable& table);
ProfileTable profiles_from_json(const std::string& text);
/// task_id,variant_index,position,proc_id,latency_ms
std::string latency_csv(const ProfileTable& table);

/// {"configs": [...]}; a bare single-config object is also accepted.
std::string slo_configs_to_json(std::span<const SloConfig> configs);
std::vector<SloConfig> slo_configs_from_json(const std::string& text);

// `seed` records the seed that trained the estimators behind the plan.
std::string plan_to_json(const PlanResult& plan, std::span<const Processor> processors, std::uint64_t seed);
std::string plans_to_json(std::span<const PlanResult> plans, std::span<const Processor> processors, std::uint64_t seed);

std::string preload_to_json(const PreloadPlan& plan, std::uint64_t seed);
PreloadPlan preload_from_json(const std::string& text);

/// "# seed=<n>" header line, then the CSV header and rows.
std::string report_csv(const SimReport& report, std::uint64_t seed);
SimReport report_from_csv(const std::string& text);
std::string summary_csv(std::span<const SummaryRow> rows, std::uint64_t seed);

struct RecallRow {
  std::uint64_t seed = 0;
  int task_id = 0;
  int k = 0;
  double recall = 0.0;
};
struct LatencyErrorRow {
  std::uint64_t seed = 0;
  double hop_cost_ms = 0.0;
  LatencyError error;
};
std::string recall_csv(std::span<const RecallRow> rows, std::uint64_t seed);
std::string latency_error_csv(std::span<const LatencyErrorRow> rows, std::uint64_t seed);

}  // namespace loom
