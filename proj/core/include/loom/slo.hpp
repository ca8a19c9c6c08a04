#pragma once

// SLO configuration sweeps derived from the accuracy and latency spread of
// each task's original variants.

#include <map>
#include <span>
#include <vector>

#include "loom/optimizer.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

/// n evenly spaced values from lo to hi inclusive (n == 1 gives lo).
std::vector<double> uniform_samples(double lo, double hi, int n);

struct VariantRange {
  double acc_min = 0.0;
  double acc_max = 0.0;
  double lat_min_ms = 0.0;
  double lat_max_ms = 0.0;
};

/// Range over a task's original variants. The latency of a variant is its
/// lowest additive latency over `orders`.
VariantRange original_variant_range(const TaskZoo& tz, const ProfileTable& table, std::span<const PlacementOrder> orders);

std::map<int, VariantRange> original_variant_ranges(const Zoo& zoo, const ProfileTable& table,
                                                    std::span<const PlacementOrder> orders);

inline constexpr int kSloSamplesPerAxis = 5;

/// Accuracy range widened to [min-2, max+2], latency to [0.8 min, 1.2 max],
/// five samples each, crossed into 25 configs. Config id 1 + 5*a + l for
/// accuracy sample a and latency sample l.
std::vector<SloConfig> generate_slo_configs_from_ranges(const std::map<int, VariantRange>& ranges);

std::vector<SloConfig> generate_slo_configs(const Zoo& zoo, const ProfileTable& table,
                                            std::span<const PlacementOrder> orders);

enum class GuaranteeMode { accuracy_guaranteed, latency_guaranteed };

/// accuracy_guaranteed: floor fixed at the top accuracy, ceilings spread over
/// the unwidened latency range. latency_guaranteed: ceiling fixed at the
/// lowest latency, floors spread over the accuracy range.
std::vector<SloConfig> generate_guaranteed_slos_from_ranges(const std::map<int, VariantRange>& ranges,
                                                            GuaranteeMode mode);

std::vector<SloConfig> generate_guaranteed_slos(const Zoo& zoo, const ProfileTable& table,
                                                std::span<const PlacementOrder> orders, GuaranteeMode mode);

}  // namespace loom
