#pragma once

// Tasks, sparse model zoos and layer-aligned subgraphs. A stitched variant is
// identified by its donor vector: position j takes the position-j subgraph of
// variant donors[j]. Indices for tasks, variants and positions are 1-based.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loom {

using Bytes = std::uint64_t;

enum class SparsityKind { dense, unstructured_pruned, structured_pruned, quantized };
enum class Precision { fp32, fp16, int8 };

std::string_view to_string(SparsityKind kind) noexcept;
std::string_view to_string(Precision precision) noexcept;
SparsityKind parse_sparsity_kind(std::string_view text);
Precision parse_precision(std::string_view text);

struct Task {
  int task_id = 0;
  std::string name;
  int variant_count = 0;
  int subgraph_count = 0;
};

struct Subgraph {
  int task_id = 0;
  int variant_index = 0;
  int position = 0;
  Bytes mem_bytes = 0;

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

struct SparseVariant {
  int task_id = 0;
  int variant_index = 0;
  SparsityKind sparsity_kind = SparsityKind::dense;
  double sparsity_level = 0.0;
  Precision precision = Precision::fp32;
  std::vector<Subgraph> subgraphs;  // ordered by position 1..S
};

struct StitchMap {
  int task_id = 0;
  std::vector<int> donors;  // donors[j-1] is the donor variant of position j

  bool is_constant() const noexcept;
  int subgraph_count() const noexcept { return static_cast<int>(donors.size()); }

  friend auto operator<=>(const StitchMap&, const StitchMap&) = default;
  friend bool operator==(const StitchMap&, const StitchMap&) = default;
};

/// "2-1-2" style rendering of the donor vector.
std::string format_donors(const StitchMap& map);

StitchMap constant_map(int task_id, int variant_index, int subgraph_count);

/// One task together with its original (unstitched) variants.
struct TaskZoo {
  Task task;
  std::vector<SparseVariant> variants;

  const SparseVariant* find_variant(int variant_index) const noexcept;
};

/// A validated collection of task zoos. Task ids run 1..T, every task has V
/// variants indexed 1..V and every variant has exactly S subgraphs.
class Zoo {
 public:
  Zoo() = default;
  explicit Zoo(std::vector<TaskZoo> tasks);

  std::span<const TaskZoo> tasks() const noexcept { return tasks_; }
  std::size_t task_count() const noexcept { return tasks_.size(); }
  const TaskZoo& task(int task_id) const;
  std::vector<int> task_ids() const;

 private:
  std::vector<TaskZoo> tasks_;
};

/// All V^S donor vectors of a task in lexicographic order.
std::vector<StitchMap> enumerate_stitched(const Task& task);

/// Only the constant donor vectors, i.e. the original zoo.
std::vector<StitchMap> enumerate_original(const Task& task);

/// Subgraph list of a stitched variant; result[j] is position j+1 of donor
/// variant donors[j]. Throws ErrorKind::missing_variant.
std::vector<Subgraph> resolve_subgraphs(const StitchMap& map, std::span<const SparseVariant> variants);

/// T * V^S, or ErrorKind::overflow.
std::uint64_t stitched_variant_count(std::uint64_t tasks, std::uint64_t variants, std::uint64_t subgraphs);

/// Lexicographic rank k of a donor vector among the V^S maps (0-based).
std::uint64_t stitch_rank(const StitchMap& map, int variant_count);
StitchMap stitch_unrank(int task_id, std::uint64_t rank, int variant_count, int subgraph_count);

// Zoo templates modelled on the ten-variant zoos of the evaluation setup.
// Subgraph memory is the base model's per-position footprint scaled by
// (1 - sparsity_level) and by bytes-per-weight relative to FP32.

/// Four tasks (ResNet101, BERT-Base, ViT-Small, Wav2vec2), ten variants, S=3.
Zoo intel_template_zoo();
/// Four tasks, ten variants (dense, FP16, INT8, seven structured), S=2.
Zoo jetson_template_zoo();
/// Generic zoo with the given shape; variants cycle through sparsity patterns.
Zoo custom_zoo(int tasks, int variants, int subgraphs);

Bytes scaled_subgraph_memory(Bytes dense_fp32_bytes, double sparsity_level, Precision precision);

}  // namespace loom
