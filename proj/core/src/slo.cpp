#include "loom/slo.hpp"

#include <algorithm>
#include <limits>

#include "loom/errors.hpp"
#include "loom/estimator.hpp"

namespace loom {

std::vector<double> uniform_samples(double lo, double hi, int n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sample count must be >= 1");
  if (hi < lo) throw Error(ErrorKind::invalid_argument, "sample range is inverted");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
  return out;
}

VariantRange original_variant_range(const TaskZoo& tz, const ProfileTable& table, std::span<const PlacementOrder> orders) {
  if (orders.empty()) throw Error(ErrorKind::invalid_argument, "latency range needs at least one placement order");
  VariantRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const StitchMap& m : enumerate_original(tz.task)) {
    const double acc = table.variant_accuracy(m.task_id, m.donors.front());
    double lat = std::numeric_limits<double>::infinity();
    for (const PlacementOrder& o : orders) lat = std::min(lat, estimate_latency(m, o, table));
    r.acc_min = std::min(r.acc_min, acc);
    r.acc_max = std::max(r.acc_max, acc);
    r.lat_min_ms = std::min(r.lat_min_ms, lat);
    r.lat_max_ms = std::max(r.lat_max_ms, lat);
  }
  return r;
}

std::map<int, VariantRange> original_variant_ranges(const Zoo& zoo, const ProfileTable& table,
                                                    std::span<const PlacementOrder> orders) {
  std::map<int, VariantRange> out;
  for (const TaskZoo& tz : zoo.tasks()) out[tz.task.task_id] = original_variant_range(tz, table, orders);
  return out;
}

std::vector<SloConfig> generate_slo_configs_from_ranges(const std::map<int, VariantRange>& ranges) {
  constexpr int n = kSloSamplesPerAxis;
  std::vector<SloConfig> configs(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a) {
    for (int l = 0; l < n; ++l) configs[static_cast<std::size_t>(a * n + l)].config_id = 1 + a * n + l;
  }
  for (const auto& [task_id, r] : ranges) {
    const auto acc = uniform_samples(r.acc_min - 2.0, r.acc_max + 2.0, n);
    const auto lat = uniform_samples(0.8 * r.lat_min_ms, 1.2 * r.lat_max_ms, n);
    for (int a = 0; a < n; ++a) {
      for (int l = 0; l < n; ++l) {
        configs[static_cast<std::size_t>(a * n + l)].per_task[task_id] =
            TaskSlo{acc[static_cast<std::size_t>(a)], lat[static_cast<std::size_t>(l)]};
      }
    }
  }
  return configs;
}

std::vector<SloConfig> generate_slo_configs(const Zoo& zoo, const ProfileTable& table,
                                            std::span<const PlacementOrder> orders) {
  return generate_slo_configs_from_ranges(original_variant_ranges(zoo, table, orders));
}

std::vector<SloConfig> generate_guaranteed_slos_from_ranges(const std::map<int, VariantRange>& ranges,
                                                            GuaranteeMode mode) {
  constexpr int n = kSloSamplesPerAxis;
  std::vector<SloConfig> configs(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) configs[static_cast<std::size_t>(k)].config_id = k + 1;
  for (const auto& [task_id, r] : ranges) {
    if (mode == GuaranteeMode::accuracy_guaranteed) {
      const auto lat = uniform_samples(r.lat_min_ms, r.lat_max_ms, n);
      for (int k = 0; k < n; ++k) configs[static_cast<std::size_t>(k)].per_task[task_id] = {r.acc_max, lat[static_cast<std::size_t>(k)]};
    } else {
      const auto acc = uniform_samples(r.acc_min, r.acc_max, n);
      for (int k = 0; k < n; ++k) configs[static_cast<std::size_t>(k)].per_task[task_id] = {acc[static_cast<std::size_t>(k)], r.lat_min_ms};
    }
  }
  return configs;
}

std::vector<SloConfig> generate_guaranteed_slos(const Zoo& zoo, const ProfileTable& table,
                                                std::span<const PlacementOrder> orders, GuaranteeMode mode) {
  return generate_guaranteed_slos_from_ranges(original_variant_ranges(zoo, table, orders), mode);
}

}  // namespace loom
