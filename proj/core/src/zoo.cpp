#include "loom/zoo.hpp"

#include <algorithm>
#include <sstream>

#include "loom/checked.hpp"
#include "loom/errors.hpp"

namespace loom {

std::string_view to_string(SparsityKind kind) noexcept {
  switch (kind) {
    case SparsityKind::dense: return "dense";
    case SparsityKind::unstructured_pruned: return "unstructured_pruned";
    case SparsityKind::structured_pruned: return "structured_pruned";
    case SparsityKind::quantized: return "quantized";
  }
  return "dense";
}

std::string_view to_string(Precision precision) noexcept {
  switch (precision) {
    case Precision::fp32: return "FP32";
    case Precision::fp16: return "FP16";
    case Precision::int8: return "INT8";
  }
  return "FP32";
}

SparsityKind parse_sparsity_kind(std::string_view text) {
  for (auto kind : {SparsityKind::dense, SparsityKind::unstructured_pruned,
                    SparsityKind::structured_pruned, SparsityKind::quantized}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorKind::parse, "unknown sparsity_kind '" + std::string(text) + "'");
}

Precision parse_precision(std::string_view text) {
  for (auto p : {Precision::fp32, Precision::fp16, Precision::int8}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorKind::parse, "unknown precision '" + std::string(text) + "'");
}

bool StitchMap::is_constant() const noexcept {
  return std::adjacent_find(donors.begin(), donors.end(), std::not_equal_to<>()) == donors.end();
}

std::string format_donors(const StitchMap& map) {
  std::ostringstream out;
  for (std::size_t j = 0; j < map.donors.size(); ++j) {
    if (j) out << '-';
    out << map.donors[j];
  }
  return out.str();
}

StitchMap constant_map(int task_id, int variant_index, int subgraph_count) {
  return StitchMap{task_id, std::vector<int>(static_cast<std::size_t>(subgraph_count), variant_index)};
}

const SparseVariant* TaskZoo::find_variant(int variant_index) const noexcept {
  for (const auto& v : variants) {
    if (v.variant_index == variant_index) return &v;
  }
  return nullptr;
}

namespace {

void validate_task(const TaskZoo& tz, int expected_id) {
  const Task& t = tz.task;
  const std::string where = "task " + std::to_string(t.task_id);
  if (t.task_id != expected_id) {
    throw Error(ErrorKind::invalid_argument,
                "task ids must run 1..T without gaps; expected " + std::to_string(expected_id) +
                    ", found " + std::to_string(t.task_id));
  }
  if (t.variant_count < 1 || t.subgraph_count < 1) {
    throw Error(ErrorKind::invalid_argument, where + ": V and S must be >= 1");
  }
  if (static_cast<int>(tz.variants.size()) != t.variant_count) {
    throw Error(ErrorKind::invalid_argument, where + ": expected " + std::to_string(t.variant_count) +
                                                 " variants, found " + std::to_string(tz.variants.size()));
  }
  for (std::size_t i = 0; i < tz.variants.size(); ++i) {
    const SparseVariant& v = tz.variants[i];
    const std::string vwhere = where + " variant " + std::to_string(v.variant_index);
    if (v.task_id != t.task_id || v.variant_index != static_cast<int>(i) + 1) {
      throw Error(ErrorKind::invalid_argument, vwhere + ": variants must be indexed 1..V in order");
    }
    if (!(v.sparsity_level >= 0.0 && v.sparsity_level <= 1.0)) {
      throw Error(ErrorKind::invalid_argument, vwhere + ": sparsity_level outside [0,1]");
    }
    if (static_cast<int>(v.subgraphs.size()) != t.subgraph_count) {
      throw Error(ErrorKind::invalid_argument, vwhere + ": subgraph count differs from S (layer-aligned partition)");
    }
    for (std::size_t j = 0; j < v.subgraphs.size(); ++j) {
      const Subgraph& s = v.subgraphs[j];
      if (s.task_id != t.task_id || s.variant_index != v.variant_index || s.position != static_cast<int>(j) + 1) {
        throw Error(ErrorKind::invalid_argument, vwhere + ": subgraph identity mismatch at position " +
                                                     std::to_string(j + 1));
      }
    }
  }
}

}  // namespace

Zoo::Zoo(std::vector<TaskZoo> tasks) : tasks_(std::move(tasks)) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) validate_task(tasks_[i], static_cast<int>(i) + 1);
}

const TaskZoo& Zoo::task(int task_id) const {
  if (task_id < 1 || task_id > static_cast<int>(tasks_.size())) {
    throw Error(ErrorKind::missing_key, "no task with id " + std::to_string(task_id));
  }
  return tasks_[static_cast<std::size_t>(task_id - 1)];
}

std::vector<int> Zoo::task_ids() const {
  std::vector<int> ids;
  ids.reserve(tasks_.size());
  for (const auto& t : tasks_) ids.push_back(t.task.task_id);
  return ids;
}

std::vector<StitchMap> enumerate_stitched(const Task& task) {
  const auto count = checked_pow(static_cast<std::uint64_t>(task.variant_count),
                                 static_cast<std::uint64_t>(task.subgraph_count), "enumerate_stitched");
  std::vector<StitchMap> out;
  out.reserve(count);
  std::vector<int> donors(static_cast<std::size_t>(task.subgraph_count), 1);
  for (std::uint64_t k = 0; k < count; ++k) {
    out.push_back(StitchMap{task.task_id, donors});
    // Odometer increment, last position fastest.
    for (int j = task.subgraph_count - 1; j >= 0; --j) {
      auto& d = donors[static_cast<std::size_t>(j)];
      if (++d <= task.variant_count) break;
      d = 1;
    }
  }
  return out;
}

std::vector<StitchMap> enumerate_original(const Task& task) {
  std::vector<StitchMap> out;
  out.reserve(static_cast<std::size_t>(task.variant_count));
  for (int i = 1; i <= task.variant_count; ++i) out.push_back(constant_map(task.task_id, i, task.subgraph_count));
  return out;
}

std::vector<Subgraph> resolve_subgraphs(const StitchMap& map, std::span<const SparseVariant> variants) {
  std::vector<Subgraph> out;
  out.reserve(map.donors.size());
  for (std::size_t j = 0; j < map.donors.size(); ++j) {
    const int donor = map.donors[j];
    auto it = std::find_if(variants.begin(), variants.end(), [&](const SparseVariant& v) {
      return v.task_id == map.task_id && v.variant_index == donor;
    });
    if (it == variants.end()) {
      throw Error(ErrorKind::missing_variant, "task " + std::to_string(map.task_id) + " has no variant " +
                                                  std::to_string(donor) + " (position " + std::to_string(j + 1) + ")");
    }
    if (j >= it->subgraphs.size()) {
      throw Error(ErrorKind::missing_variant, "variant " + std::to_string(donor) + " has no position " +
                                                  std::to_string(j + 1));
    }
    out.push_back(it->subgraphs[j]);
  }
  return out;
}

std::uint64_t stitched_variant_count(std::uint64_t tasks, std::uint64_t variants, std::uint64_t subgraphs) {
  if (tasks < 1 || variants < 1 || subgraphs < 1) {
    throw Error(ErrorKind::invalid_argument, "stitched_variant_count: T, V, S must be >= 1");
  }
  return checked_mul(tasks, checked_pow(variants, subgraphs, "stitched_variant_count"), "stitched_variant_count");
}

std::uint64_t stitch_rank(const StitchMap& map, int variant_count) {
  std::uint64_t rank = 0;
  for (int d : map.donors) {
    if (d < 1 || d > variant_count) {
      throw Error(ErrorKind::missing_variant, "donor " + std::to_string(d) + " outside 1.." +
                                                  std::to_string(variant_count));
    }
    rank = checked_add(checked_mul(rank, static_cast<std::uint64_t>(variant_count), "stitch_rank"),
                       static_cast<std::uint64_t>(d - 1), "stitch_rank");
  }
  return rank;
}

StitchMap stitch_unrank(int task_id, std::uint64_t rank, int variant_count, int subgraph_count) {
  StitchMap map{task_id, std::vector<int>(static_cast<std::size_t>(subgraph_count), 1)};
  for (int j = subgraph_count - 1; j >= 0; --j) {
    map.donors[static_cast<std::size_t>(j)] = static_cast<int>(rank % static_cast<std::uint64_t>(variant_count)) + 1;
    rank /= static_cast<std::uint64_t>(variant_count);
  }
  return map;
}

}  // namespace loom
