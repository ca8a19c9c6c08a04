#pragma once

// Ground-truth profile data: subgraph latency per processor, variant accuracy
// and the accuracy of every stitched variant in the synthetic world.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loom/zoo.hpp"

namespace loom {

struct Processor {
  int proc_id = 0;
  std::string name;  // "CPU", "GPU", "NPU", ...
  double speed_factor = 1.0;

  /// First letter of the name, used in "N-G-C" style order labels.
  char code() const noexcept { return name.empty() ? '?' : name.front(); }
};

/// CPU, GPU, NPU (in that id order), truncated to `count`.
std::vector<Processor> default_processors(int count);

/// One processor per subgraph position, no processor used twice.
struct PlacementOrder {
  std::vector<int> procs;

  friend auto operator<=>(const PlacementOrder&, const PlacementOrder&) = default;
  friend bool operator==(const PlacementOrder&, const PlacementOrder&) = default;
};

/// All injective assignments of P processors to S positions, lexicographic by
/// processor-id sequence. |result| = P!/(P-S)!. Requires S <= P.
std::vector<PlacementOrder> enumerate_orders(int processor_count, int subgraph_count);

std::string format_order(const PlacementOrder& order, std::span<const Processor> processors);
PlacementOrder parse_order(std::string_view label, std::span<const Processor> processors);

/// Accelerator-first order (NPU, GPU, then CPU) truncated to S positions; N-G-C
/// on a three-processor SoC.
PlacementOrder default_baseline_order(std::span<const Processor> processors, int subgraph_count);

/// How a processor responds to each sparsity pattern. Latency of a subgraph is
///   base_work * precision_scale * (1 - gain(kind) * level) / speed_factor.
struct ProcessorTuning {
  double unstructured_gain = 0.0;
  double structured_gain = 0.8;
  double fp16_scale = 0.6;
  double int8_scale = 0.5;
};

struct TaskWorkload {
  std::vector<double> base_work_ms;  // per position, dense FP32 on a speed-1.0 processor
  double base_accuracy = 80.0;
};

struct GenParams {
  std::map<std::string, ProcessorTuning> tuning;  // keyed by processor name
  ProcessorTuning default_tuning;
  std::map<int, TaskWorkload> workloads;  // keyed by task id
  TaskWorkload default_workload{{10.0}, 80.0};

  double latency_jitter = 0.05;     // epsilon, multiplicative noise in [1-eps, 1+eps]
  double variant_acc_noise = 0.2;   // stddev of per-variant accuracy noise
  double sigma_acc = 0.5;           // stddev of stitched-accuracy noise

  double unstructured_acc_coef = 20.0;
  double unstructured_acc_exp = 2.0;
  double structured_acc_coef = 25.0;
  double structured_acc_exp = 1.5;
  double fp16_acc_penalty = 0.1;
  double int8_acc_penalty = 0.5;

  const ProcessorTuning& tuning_for(const Processor& p) const;
  const TaskWorkload& workload_for(int task_id) const;
  void validate() const;
};

GenParams intel_gen_params();
GenParams jetson_gen_params();

class ProfileTable {
 public:
  ProfileTable() = default;
  ProfileTable(std::vector<Processor> processors, std::uint64_t seed, GenParams params);

  // Construction. The table is treated as immutable once built.
  void add_task(int task_id, int variant_count, int subgraph_count);
  void set_latency(int task_id, int variant_index, int position, int proc_id, double ms);
  void set_variant_accuracy(int task_id, int variant_index, double accuracy);
  void set_stitched_truth(const StitchMap& map, double accuracy);

  /// Throws ErrorKind::missing_key naming the full key.
  double latency(int task_id, int variant_index, int position, int proc_id) const;
  double variant_accuracy(int task_id, int variant_index) const;
  double stitched_truth(const StitchMap& map) const;
  bool has_stitched_truth(int task_id) const;

  std::span<const Processor> processors() const noexcept { return processors_; }
  const Processor& processor(int proc_id) const;
  int processor_count() const noexcept { return static_cast<int>(processors_.size()); }
  std::uint64_t seed() const noexcept { return seed_; }
  const GenParams& gen_params() const noexcept { return params_; }

  std::vector<int> task_ids() const;
  int variant_count(int task_id) const;
  int subgraph_count(int task_id) const;

 private:
  struct TaskProfile {
    int variants = 0;
    int subgraphs = 0;
    std::vector<double> latency;   // [(i-1)*S + (j-1)]*P + (p-1); NaN = absent
    std::vector<double> accuracy;  // [i-1]
    std::vector<double> truth;     // [lexicographic rank]; empty = absent
  };
  const TaskProfile& task(int task_id) const;
  TaskProfile& task(int task_id);
  std::size_t latency_index(const TaskProfile& tp, int variant_index, int position, int proc_id) const;

  std::vector<Processor> processors_;
  std::uint64_t seed_ = 0;
  GenParams params_;
  std::map<int, TaskProfile> tasks_;
};

/// Deterministic synthetic profiles. Constant donor vectors get exactly the
/// variant accuracy; mixed ones the mean donor accuracy plus N(0, sigma_acc).
ProfileTable generate_synthetic(const Zoo& zoo, std::vector<Processor> processors, const GenParams& params,
                                std::uint64_t seed);

inline double lookup_latency(const ProfileTable& table, int task_id, int variant_index, int position, int proc_id) {
  return table.latency(task_id, variant_index, position, proc_id);
}

/// Sum of mem_bytes over every subgraph of every variant of every task.
Bytes full_preload_memory(const Zoo& zoo);

/// End-to-end latencies of six stitched ResNet101 variants under the six
/// three-processor placement orders (P: pruned, Q: quantized, D: dense;
/// C/G/N: CPU/GPU/NPU). Per-subgraph latencies are not part of the fixture.
struct OrderLatencyFixture {
  std::vector<std::string> variant_labels;  // e.g. "P-Q-P"
  std::vector<std::string> order_labels;    // e.g. "N-G-C"
  std::vector<std::vector<double>> latency_ms;  // [order][variant]

  double lookup(std::string_view variant_label, std::string_view order_label) const;
};

OrderLatencyFixture resnet_order_fixture();

}  // namespace loom
