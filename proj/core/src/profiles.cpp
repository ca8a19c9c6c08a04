#include "loom/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "loom/checked.hpp"
#include "loom/errors.hpp"
#include "loom/rng.hpp"

namespace loom {

namespace {
constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::string key_text(int task_id, int variant_index, int position, int proc_id) {
  std::ostringstream out;
  out << "(task=" << task_id << ", variant=" << variant_index << ", position=" << position
      << ", proc=" << proc_id << ")";
  return out.str();
}
}  // namespace

std::vector<Processor> default_processors(int count) {
  const std::vector<Processor> all = {{1, "CPU", 1.0}, {2, "GPU", 2.0}, {3, "NPU", 2.6}};
  if (count < 1 || count > static_cast<int>(all.size())) {
    throw Error(ErrorKind::invalid_argument, "default_processors supports 1..3 processors");
  }
  return {all.begin(), all.begin() + count};
}

std::vector<PlacementOrder> enumerate_orders(int processor_count, int subgraph_count) {
  if (processor_count < 1 || subgraph_count < 1 || subgraph_count > processor_count) {
    throw Error(ErrorKind::invalid_argument, "placement orders need 1 <= S <= P (non-overlapping assignment)");
  }
  std::vector<PlacementOrder> out;
  std::vector<int> current;
  std::vector<bool> used(static_cast<std::size_t>(processor_count) + 1, false);
  auto recurse = [&](auto&& self) -> void {
    if (static_cast<int>(current.size()) == subgraph_count) {
      out.push_back(PlacementOrder{current});
      return;
    }
    for (int p = 1; p <= processor_count; ++p) {
      if (used[static_cast<std::size_t>(p)]) continue;
      used[static_cast<std::size_t>(p)] = true;
      current.push_back(p);
      self(self);
      current.pop_back();
      used[static_cast<std::size_t>(p)] = false;
    }
  };
  recurse(recurse);
  return out;
}

std::string format_order(const PlacementOrder& order, std::span<const Processor> processors) {
  std::string out;
  for (std::size_t j = 0; j < order.procs.size(); ++j) {
    if (j) out += '-';
    auto it = std::find_if(processors.begin(), processors.end(),
                           [&](const Processor& p) { return p.proc_id == order.procs[j]; });
    out += it == processors.end() ? '?' : it->code();
  }
  return out;
}

PlacementOrder parse_order(std::string_view label, std::span<const Processor> processors) {
  PlacementOrder order;
  for (char c : label) {
    if (c == '-') continue;
    auto it = std::find_if(processors.begin(), processors.end(), [&](const Processor& p) { return p.code() == c; });
    if (it == processors.end()) {
      throw Error(ErrorKind::parse, "unknown processor code '" + std::string(1, c) + "' in order " + std::string(label));
    }
    order.procs.push_back(it->proc_id);
  }
  return order;
}

PlacementOrder default_baseline_order(std::span<const Processor> processors, int subgraph_count) {
  auto rank = [](const Processor& p) {
    switch (p.code()) {
      case 'N': return 0;
      case 'G': return 1;
      case 'C': return 2;
      default: return 3;
    }
  };
  std::vector<Processor> sorted(processors.begin(), processors.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](const Processor& a, const Processor& b) { return rank(a) < rank(b); });
  if (subgraph_count > static_cast<int>(sorted.size())) {
    throw Error(ErrorKind::invalid_argument, "baseline order needs S <= P");
  }
  PlacementOrder order;
  for (int j = 0; j < subgraph_count; ++j) order.procs.push_back(sorted[static_cast<std::size_t>(j)].proc_id);
  return order;
}

const ProcessorTuning& GenParams::tuning_for(const Processor& p) const {
  auto it = tuning.find(p.name);
  return it == tuning.end() ? default_tuning : it->second;
}

const TaskWorkload& GenParams::workload_for(int task_id) const {
  auto it = workloads.find(task_id);
  return it == workloads.end() ? default_workload : it->second;
}

void GenParams::validate() const {
  auto check_tuning = [](const std::string& name, const ProcessorTuning& t) {
    if (t.unstructured_gain < 0 || t.structured_gain < 0 || t.unstructured_gain >= 1 || t.structured_gain >= 1) {
      throw Error(ErrorKind::invalid_parameter, "tuning '" + name + "': sparsity gains must lie in [0,1)");
    }
    if (t.fp16_scale <= 0 || t.int8_scale <= 0) {
      throw Error(ErrorKind::invalid_parameter, "tuning '" + name + "': precision scalings must be positive");
    }
  };
  check_tuning("default", default_tuning);
  for (const auto& [name, t] : tuning) check_tuning(name, t);
  auto check_workload = [](const TaskWorkload& w) {
    for (double b : w.base_work_ms) {
      if (!(b > 0)) throw Error(ErrorKind::invalid_parameter, "base_work_ms must be positive");
    }
  };
  check_workload(default_workload);
  for (const auto& [id, w] : workloads) check_workload(w);
  if (!(latency_jitter >= 0 && latency_jitter < 1)) {
    throw Error(ErrorKind::invalid_parameter, "latency_jitter must lie in [0,1)");
  }
  if (!(sigma_acc >= 0) || !(variant_acc_noise >= 0)) {
    throw Error(ErrorKind::invalid_parameter, "accuracy noise must be non-negative");
  }
  if (unstructured_acc_coef < 0 || structured_acc_coef < 0 || fp16_acc_penalty < 0 || int8_acc_penalty < 0) {
    throw Error(ErrorKind::invalid_parameter, "accuracy penalties must be non-negative");
  }
}

GenParams intel_gen_params() {
  GenParams g;
  g.tuning["CPU"] = {0.75, 0.90, 1.00, 0.55};
  g.tuning["GPU"] = {0.10, 0.80, 0.60, 0.50};
  g.tuning["NPU"] = {0.00, 0.70, 0.55, 0.35};
  g.workloads[1] = {{9.0, 8.0, 6.0}, 77.4};
  g.workloads[2] = {{8.0, 8.0, 7.0}, 92.4};
  g.workloads[3] = {{4.0, 4.5, 3.5}, 89.0};
  g.workloads[4] = {{11.0, 9.0, 8.0}, 96.6};
  return g;
}

GenParams jetson_gen_params() {
  GenParams g;
  // No unstructured-sparsity acceleration on this platform.
  g.tuning["CPU"] = {0.00, 0.90, 1.00, 0.60};
  g.tuning["GPU"] = {0.00, 0.80, 0.55, 0.40};
  g.workloads[1] = {{17.0, 6.0}, 77.4};
  g.workloads[2] = {{16.0, 7.0}, 92.4};
  g.workloads[3] = {{8.5, 3.5}, 89.0};
  g.workloads[4] = {{20.0, 8.0}, 96.6};
  return g;
}

ProfileTable::ProfileTable(std::vector<Processor> processors, std::uint64_t seed, GenParams params)
    : processors_(std::move(processors)), seed_(seed), params_(std::move(params)) {
  for (std::size_t i = 0; i < processors_.size(); ++i) {
    if (processors_[i].proc_id != static_cast<int>(i) + 1) {
      throw Error(ErrorKind::invalid_argument, "processor ids must run 1..P without gaps");
    }
    if (!(processors_[i].speed_factor > 0)) {
      throw Error(ErrorKind::invalid_parameter, "processor speed_factor must be positive");
    }
  }
}

void ProfileTable::add_task(int task_id, int variant_count, int subgraph_count) {
  TaskProfile tp;
  tp.variants = variant_count;
  tp.subgraphs = subgraph_count;
  tp.latency.assign(static_cast<std::size_t>(variant_count * subgraph_count) * processors_.size(), kAbsent);
  tp.accuracy.assign(static_cast<std::size_t>(variant_count), kAbsent);
  tasks_[task_id] = std::move(tp);
}

const ProfileTable::TaskProfile& ProfileTable::task(int task_id) const {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorKind::missing_key, "no profile for task " + std::to_string(task_id));
  return it->second;
}

ProfileTable::TaskProfile& ProfileTable::task(int task_id) {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorKind::missing_key, "no profile for task " + std::to_string(task_id));
  return it->second;
}

std::size_t ProfileTable::latency_index(const TaskProfile& tp, int variant_index, int position, int proc_id) const {
  const int p_count = processor_count();
  if (variant_index < 1 || variant_index > tp.variants || position < 1 || position > tp.subgraphs || proc_id < 1 ||
      proc_id > p_count) {
    return std::numeric_limits<std::size_t>::max();
  }
  return (static_cast<std::size_t>((variant_index - 1) * tp.subgraphs + (position - 1))) * static_cast<std::size_t>(p_count) +
         static_cast<std::size_t>(proc_id - 1);
}

void ProfileTable::set_latency(int task_id, int variant_index, int position, int proc_id, double ms) {
  TaskProfile& tp = task(task_id);
  const auto idx = latency_index(tp, variant_index, position, proc_id);
  if (idx >= tp.latency.size()) {
    throw Error(ErrorKind::missing_key, "latency key out of range " + key_text(task_id, variant_index, position, proc_id));
  }
  if (!(ms > 0)) {
    throw Error(ErrorKind::invalid_parameter, "latency must be positive at " + key_text(task_id, variant_index, position, proc_id));
  }
  tp.latency[idx] = ms;
}

void ProfileTable::set_variant_accuracy(int task_id, int variant_index, double accuracy) {
  TaskProfile& tp = task(task_id);
  if (variant_index < 1 || variant_index > tp.variants) {
    throw Error(ErrorKind::missing_key, "no variant " + std::to_string(variant_index) + " in task " + std::to_string(task_id));
  }
  if (!(accuracy >= 0 && accuracy <= 100)) throw Error(ErrorKind::invalid_parameter, "accuracy outside [0,100]");
  tp.accuracy[static_cast<std::size_t>(variant_index - 1)] = accuracy;
}

void ProfileTable::set_stitched_truth(const StitchMap& map, double accuracy) {
  TaskProfile& tp = task(map.task_id);
  if (map.subgraph_count() != tp.subgraphs) {
    throw Error(ErrorKind::dimension_mismatch, "donor vector length differs from S");
  }
  if (!(accuracy >= 0 && accuracy <= 100)) throw Error(ErrorKind::invalid_parameter, "accuracy outside [0,100]");
  const auto rank = stitch_rank(map, tp.variants);
  if (tp.truth.empty()) {
    const auto n = checked_pow(static_cast<std::uint64_t>(tp.variants), static_cast<std::uint64_t>(tp.subgraphs),
                               "stitched accuracy table");
    tp.truth.assign(n, kAbsent);
  }
  tp.truth[rank] = accuracy;
}

double ProfileTable::latency(int task_id, int variant_index, int position, int proc_id) const {
  auto it = tasks_.find(task_id);
  if (it != tasks_.end()) {
    const auto idx = latency_index(it->second, variant_index, position, proc_id);
    if (idx < it->second.latency.size() && !std::isnan(it->second.latency[idx])) return it->second.latency[idx];
  }
  throw Error(ErrorKind::missing_key, "missing latency " + key_text(task_id, variant_index, position, proc_id));
}

double ProfileTable::variant_accuracy(int task_id, int variant_index) const {
  auto it = tasks_.find(task_id);
  if (it != tasks_.end() && variant_index >= 1 && variant_index <= it->second.variants) {
    const double a = it->second.accuracy[static_cast<std::size_t>(variant_index - 1)];
    if (!std::isnan(a)) return a;
  }
  throw Error(ErrorKind::missing_key, "missing accuracy (task=" + std::to_string(task_id) +
                                          ", variant=" + std::to_string(variant_index) + ")");
}

double ProfileTable::stitched_truth(const StitchMap& map) const {
  auto it = tasks_.find(map.task_id);
  if (it != tasks_.end() && !it->second.truth.empty() && map.subgraph_count() == it->second.subgraphs) {
    const double a = it->second.truth[stitch_rank(map, it->second.variants)];
    if (!std::isnan(a)) return a;
  }
  throw Error(ErrorKind::missing_key, "missing stitched accuracy (task=" + std::to_string(map.task_id) +
                                          ", donors=" + format_donors(map) + ")");
}

bool ProfileTable::has_stitched_truth(int task_id) const {
  auto it = tasks_.find(task_id);
  return it != tasks_.end() && !it->second.truth.empty();
}

const Processor& ProfileTable::processor(int proc_id) const {
  if (proc_id < 1 || proc_id > processor_count()) {
    throw Error(ErrorKind::missing_key, "no processor with id " + std::to_string(proc_id));
  }
  return processors_[static_cast<std::size_t>(proc_id - 1)];
}

std::vector<int> ProfileTable::task_ids() const {
  std::vector<int> ids;
  for (const auto& [id, tp] : tasks_) ids.push_back(id);
  return ids;
}

int ProfileTable::variant_count(int task_id) const { return task(task_id).variants; }
int ProfileTable::subgraph_count(int task_id) const { return task(task_id).subgraphs; }

namespace {

double kind_scaling(const SparseVariant& v, const ProcessorTuning& t) {
  double scale = 1.0;
  if (v.precision == Precision::fp16) scale *= t.fp16_scale;
  if (v.precision == Precision::int8) scale *= t.int8_scale;
  if (v.sparsity_kind == SparsityKind::unstructured_pruned) scale *= 1.0 - t.unstructured_gain * v.sparsity_level;
  if (v.sparsity_kind == SparsityKind::structured_pruned) scale *= 1.0 - t.structured_gain * v.sparsity_level;
  return scale;
}

double accuracy_penalty(const SparseVariant& v, const GenParams& g) {
  double penalty = 0.0;
  if (v.sparsity_kind == SparsityKind::unstructured_pruned) {
    penalty += g.unstructured_acc_coef * std::pow(v.sparsity_level, g.unstructured_acc_exp);
  }
  if (v.sparsity_kind == SparsityKind::structured_pruned) {
    penalty += g.structured_acc_coef * std::pow(v.sparsity_level, g.structured_acc_exp);
  }
  if (v.precision == Precision::fp16) penalty += g.fp16_acc_penalty;
  if (v.precision == Precision::int8) penalty += g.int8_acc_penalty;
  return penalty;
}

double clamp_accuracy(double a) { return std::clamp(a, 0.0, 100.0); }

}  // namespace

ProfileTable generate_synthetic(const Zoo& zoo, std::vector<Processor> processors, const GenParams& params,
                                std::uint64_t seed) {
  params.validate();
  ProfileTable table(std::move(processors), seed, params);
  const auto procs = table.processors();

  for (const TaskZoo& tz : zoo.tasks()) {
    const Task& t = tz.task;
    const TaskWorkload& work = params.workload_for(t.task_id);
    table.add_task(t.task_id, t.variant_count, t.subgraph_count);

    Rng lat_rng(derive_seed(seed, {1, static_cast<std::uint64_t>(t.task_id)}));
    for (const SparseVariant& v : tz.variants) {
      for (int j = 1; j <= t.subgraph_count; ++j) {
        const auto wj = static_cast<std::size_t>(j - 1);
        const double base = wj < work.base_work_ms.size() ? work.base_work_ms[wj] : work.base_work_ms.back();
        for (const Processor& p : procs) {
          const double jitter = lat_rng.uniform(1.0 - params.latency_jitter, 1.0 + params.latency_jitter);
          const double ms = base * kind_scaling(v, params.tuning_for(p)) / p.speed_factor * jitter;
          table.set_latency(t.task_id, v.variant_index, j, p.proc_id, ms);
        }
      }
    }

    Rng acc_rng(derive_seed(seed, {2, static_cast<std::uint64_t>(t.task_id)}));
    std::vector<double> accuracy;
    for (const SparseVariant& v : tz.variants) {
      const bool reference = v.sparsity_kind == SparsityKind::dense && v.precision == Precision::fp32;
      const double noise = reference ? 0.0 : acc_rng.normal(0.0, params.variant_acc_noise);
      const double a = clamp_accuracy(work.base_accuracy - accuracy_penalty(v, params) + noise);
      table.set_variant_accuracy(t.task_id, v.variant_index, a);
      accuracy.push_back(a);
    }

    Rng truth_rng(derive_seed(seed, {3, static_cast<std::uint64_t>(t.task_id)}));
    for (const StitchMap& m : enumerate_stitched(t)) {
      if (m.is_constant()) {
        table.set_stitched_truth(m, accuracy[static_cast<std::size_t>(m.donors.front() - 1)]);
        continue;
      }
      double mean = 0.0;
      for (int d : m.donors) mean += accuracy[static_cast<std::size_t>(d - 1)];
      mean /= static_cast<double>(m.donors.size());
      table.set_stitched_truth(m, clamp_accuracy(mean + truth_rng.normal(0.0, params.sigma_acc)));
    }
  }
  return table;
}

Bytes full_preload_memory(const Zoo& zoo) {
  Bytes total = 0;
  for (const TaskZoo& tz : zoo.tasks()) {
    for (const SparseVariant& v : tz.variants) {
      for (const Subgraph& s : v.subgraphs) total = checked_add(total, s.mem_bytes, "full_preload_memory");
    }
  }
  return total;
}

double OrderLatencyFixture::lookup(std::string_view variant_label, std::string_view order_label) const {
  auto v = std::find(variant_labels.begin(), variant_labels.end(), variant_label);
  auto o = std::find(order_labels.begin(), order_labels.end(), order_label);
  if (v == variant_labels.end() || o == order_labels.end()) {
    throw Error(ErrorKind::missing_key,
                "no fixture entry (variant=" + std::string(variant_label) + ", order=" + std::string(order_label) + ")");
  }
  return latency_ms[static_cast<std::size_t>(o - order_labels.begin())][static_cast<std::size_t>(v - variant_labels.begin())];
}

OrderLatencyFixture resnet_order_fixture() {
  OrderLatencyFixture f;
  f.variant_labels = {"P-Q-P", "P-P-Q", "D-D-P", "D-P-Q", "Q-P-D", "P-D-Q"};
  f.order_labels = {"N-G-C", "C-G-N", "G-C-N", "G-N-C", "N-C-G", "C-N-G"};
  f.latency_ms = {
      {12.05, 16.91, 14.77, 17.73, 18.25, 16.99},
      {11.01, 13.40, 14.45, 15.56, 20.27, 13.48},
      {13.20, 13.69, 13.51, 12.14, 12.17, 15.54},
      {12.98, 14.22, 13.49, 14.57, 13.63, 16.51},
      {15.72, 11.93, 17.39, 12.01, 13.79, 15.73},
      {13.72, 10.77, 15.40, 12.88, 18.21, 12.51},
  };
  return f;
}

}  // namespace loom
