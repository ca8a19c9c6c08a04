#pragma once

// Accuracy and latency estimation for stitched variants, profiling-cost
// accounting, and estimator-quality metrics.

#include <cstdint>
#include <span>
#include <vector>

#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace loom {

/// values[j] is the measured accuracy of the position-j donor variant.
struct AccuracyFeature {
  std::vector<double> values;
};

/// Throws ErrorKind::missing_key when a donor has no accuracy entry.
AccuracyFeature extract_features(const StitchMap& map, const ProfileTable& table);

/// Reference predictor: the mean of the donor accuracies. Exact when the
/// stitched-accuracy noise is zero.
double mean_feature_accuracy(const AccuracyFeature& feature);

struct TrainingSample {
  AccuracyFeature feature;
  double accuracy = 0.0;
};

/// Least-squares linear base plus gradient-boosted regression trees on its
/// residuals (squared loss).
struct BoostParams {
  int rounds = 10;
  int max_depth = 2;
  double learning_rate = 0.1;
  int min_leaf = 8;
  double ridge = 1e-6;
  double subsample = 1.0;  // row fraction per round, drawn from the train seed
};

class AccuracyEstimator {
 public:
  /// Prediction clamped to [0, 100]. Throws ErrorKind::dimension_mismatch.
  double predict(const AccuracyFeature& feature) const;

  int dimension() const noexcept { return dimension_; }
  int train_sample_count() const noexcept { return sample_count_; }
  std::uint64_t train_seed() const noexcept { return seed_; }
  /// Set when every training feature vector was identical.
  bool degenerate_training_set() const noexcept { return degenerate_; }

 private:
  friend AccuracyEstimator train_accuracy_estimator(std::span<const TrainingSample>, const BoostParams&, std::uint64_t);

  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  double tree_value(const std::vector<Node>& tree, const std::vector<double>& x) const;

  int dimension_ = 0;
  int sample_count_ = 0;
  std::uint64_t seed_ = 0;
  bool degenerate_ = false;
  double intercept_ = 0.0;
  std::vector<double> weights_;
  double learning_rate_ = 0.0;
  std::vector<std::vector<Node>> trees_;
};

/// Throws ErrorKind::empty_samples, ErrorKind::dimension_mismatch, or
/// ErrorKind::invalid_parameter for labels outside [0,100].
AccuracyEstimator train_accuracy_estimator(std::span<const TrainingSample> samples, const BoostParams& params,
                                           std::uint64_t seed);

inline double predict_accuracy(const AccuracyEstimator& est, const AccuracyFeature& feature) {
  return est.predict(feature);
}

/// `count` distinct donor vectors drawn uniformly from the task's V^S maps,
/// labelled with the ground-truth stitched accuracy. Sorted by donor vector.
std::vector<TrainingSample> sample_training_set(const Task& task, const ProfileTable& table, int count,
                                                std::uint64_t seed, std::vector<StitchMap>* maps_out = nullptr);

/// Sum of the per-subgraph latencies on their assigned processors, plus
/// comm_ms per hop between consecutive subgraphs.
double estimate_latency(const StitchMap& map, const PlacementOrder& order, const ProfileTable& table,
                        double comm_ms = 0.0);

/// Profiling runs. With estimators: T*V + T*S*V*P. Exhaustive: T*V*(P!+1)
/// without stitching, T*V^S*(P!+1) with stitching.
std::uint64_t profiling_cost(std::uint64_t tasks, std::uint64_t variants, std::uint64_t subgraphs,
                             std::uint64_t processors, bool with_stitching, bool with_estimators);

/// Ground-truth runs needed to train one accuracy estimator per task; kept
/// apart from profiling_cost.
std::uint64_t estimator_training_runs(std::uint64_t tasks, std::uint64_t samples_per_task);

/// |true top-K ∩ predicted top-K| / K. Both rankings sort by score descending
/// and break ties by the lexicographically lower donor vector.
double top_k_recall(std::span<const double> predicted, std::span<const double> truth, std::span<const StitchMap> maps,
                    int k);
double top_k_recall(const AccuracyEstimator& est, std::span<const StitchMap> candidates, const ProfileTable& table,
                    int k);

struct LatencyError {
  double mae_ms = 0.0;
  double mape = 0.0;  // fraction, not percent
};

/// Throws ErrorKind::length_mismatch (also for empty input) and
/// ErrorKind::zero_truth for truths below 1e-9 ms.
LatencyError latency_error(std::span<const double> estimates, std::span<const double> truths);

}  // namespace loom
