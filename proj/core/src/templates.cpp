#include <algorithm>
#include <cmath>
#include <string>

#include "loom/errors.hpp"
#include "loom/zoo.hpp"

namespace loom {

Bytes scaled_subgraph_memory(Bytes dense_fp32_bytes, double sparsity_level, Precision precision) {
  double bytes_per_weight = 4.0;
  if (precision == Precision::fp16) bytes_per_weight = 2.0;
  if (precision == Precision::int8) bytes_per_weight = 1.0;
  const double scaled = static_cast<double>(dense_fp32_bytes) * (1.0 - sparsity_level) * bytes_per_weight / 4.0;
  return static_cast<Bytes>(std::llround(scaled));
}

namespace {

struct Pattern {
  SparsityKind kind;
  double level;
  Precision precision;
};

struct BaseModel {
  const char* name;
  std::vector<Bytes> dense_bytes;  // per position, FP32
};

TaskZoo build_task(int task_id, const BaseModel& model, const std::vector<Pattern>& patterns) {
  TaskZoo tz;
  tz.task = Task{task_id, model.name, static_cast<int>(patterns.size()), static_cast<int>(model.dense_bytes.size())};
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    SparseVariant v;
    v.task_id = task_id;
    v.variant_index = static_cast<int>(i) + 1;
    v.sparsity_kind = patterns[i].kind;
    v.sparsity_level = patterns[i].level;
    v.precision = patterns[i].precision;
    for (std::size_t j = 0; j < model.dense_bytes.size(); ++j) {
      v.subgraphs.push_back(Subgraph{task_id, v.variant_index, static_cast<int>(j) + 1,
                                     scaled_subgraph_memory(model.dense_bytes[j], v.sparsity_level, v.precision)});
    }
    tz.variants.push_back(std::move(v));
  }
  return tz;
}

}  // namespace

Zoo intel_template_zoo() {
  const std::vector<Pattern> patterns = {
      {SparsityKind::dense, 0.0, Precision::fp32},
      {SparsityKind::quantized, 0.0, Precision::int8},
      {SparsityKind::unstructured_pruned, 0.90, Precision::fp32},
      {SparsityKind::unstructured_pruned, 0.85, Precision::fp32},
      {SparsityKind::unstructured_pruned, 0.80, Precision::fp32},
      {SparsityKind::unstructured_pruned, 0.75, Precision::fp32},
      {SparsityKind::unstructured_pruned, 0.70, Precision::fp32},
      {SparsityKind::unstructured_pruned, 0.65, Precision::fp32},
      {SparsityKind::structured_pruned, 0.40, Precision::fp32},
      {SparsityKind::structured_pruned, 0.50, Precision::fp32},
  };
  const std::vector<BaseModel> models = {
      {"resnet101", {52'000'000, 60'000'000, 66'000'000}},
      {"bert-base", {150'000'000, 145'000'000, 145'000'000}},
      {"vit-small", {29'000'000, 29'000'000, 30'000'000}},
      {"wav2vec2", {126'000'000, 126'000'000, 126'000'000}},
  };
  std::vector<TaskZoo> tasks;
  for (std::size_t t = 0; t < models.size(); ++t) tasks.push_back(build_task(static_cast<int>(t) + 1, models[t], patterns));
  return Zoo(std::move(tasks));
}

Zoo jetson_template_zoo() {
  const std::vector<Pattern> patterns = {
      {SparsityKind::dense, 0.0, Precision::fp32},
      {SparsityKind::quantized, 0.0, Precision::fp16},
      {SparsityKind::quantized, 0.0, Precision::int8},
      {SparsityKind::structured_pruned, 0.20, Precision::fp32},
      {SparsityKind::structured_pruned, 0.30, Precision::fp32},
      {SparsityKind::structured_pruned, 0.35, Precision::fp32},
      {SparsityKind::structured_pruned, 0.40, Precision::fp32},
      {SparsityKind::structured_pruned, 0.45, Precision::fp32},
      {SparsityKind::structured_pruned, 0.50, Precision::fp32},
      {SparsityKind::structured_pruned, 0.55, Precision::fp32},
  };
  // Two processors (CPU, GPU) on this platform, so two subgraphs per variant.
  const std::vector<BaseModel> models = {
      {"resnet101", {112'000'000, 66'000'000}},
      {"bert-base", {295'000'000, 145'000'000}},
      {"vit-small", {58'000'000, 30'000'000}},
      {"wav2vec2", {252'000'000, 126'000'000}},
  };
  std::vector<TaskZoo> tasks;
  for (std::size_t t = 0; t < models.size(); ++t) tasks.push_back(build_task(static_cast<int>(t) + 1, models[t], patterns));
  return Zoo(std::move(tasks));
}

Zoo custom_zoo(int tasks, int variants, int subgraphs) {
  if (tasks < 1 || variants < 1 || subgraphs < 1) {
    throw Error(ErrorKind::invalid_argument, "custom_zoo: T, V, S must be >= 1");
  }
  std::vector<Pattern> patterns;
  for (int i = 1; i <= variants; ++i) {
    if (i == 1) {
      patterns.push_back({SparsityKind::dense, 0.0, Precision::fp32});
    } else if (i == 2) {
      patterns.push_back({SparsityKind::quantized, 0.0, Precision::int8});
    } else if (i % 2 == 1) {
      patterns.push_back({SparsityKind::unstructured_pruned, std::min(0.95, 0.50 + 0.05 * ((i - 3) / 2)), Precision::fp32});
    } else {
      patterns.push_back({SparsityKind::structured_pruned, std::min(0.90, 0.20 + 0.05 * ((i - 4) / 2)), Precision::fp32});
    }
  }
  std::vector<TaskZoo> out;
  for (int t = 1; t <= tasks; ++t) {
    BaseModel model{"", {}};
    const std::string name = "task" + std::to_string(t);
    model.name = name.c_str();
    for (int j = 0; j < subgraphs; ++j) model.dense_bytes.push_back(static_cast<Bytes>(10'000'000 + 2'500'000 * ((j + t) % 4)));
    out.push_back(build_task(t, model, patterns));
  }
  return Zoo(std::move(out));
}

}  // namespace loom
