#include "loom/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "loom/checked.hpp"
#include "loom/errors.hpp"
#include "loom/rng.hpp"

namespace loom {

AccuracyFeature extract_features(const StitchMap& map, const ProfileTable& table) {
  AccuracyFeature f;
  f.values.reserve(map.donors.size());
  for (int d : map.donors) f.values.push_back(table.variant_accuracy(map.task_id, d));
  return f;
}

double mean_feature_accuracy(const AccuracyFeature& feature) {
  if (feature.values.empty()) throw Error(ErrorKind::dimension_mismatch, "empty accuracy feature");
  return std::accumulate(feature.values.begin(), feature.values.end(), 0.0) / static_cast<double>(feature.values.size());
}

double AccuracyEstimator::tree_value(const std::vector<Node>& tree, const std::vector<double>& x) const {
  int idx = 0;
  while (tree[static_cast<std::size_t>(idx)].feature >= 0) {
    const Node& n = tree[static_cast<std::size_t>(idx)];
    idx = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree[static_cast<std::size_t>(idx)].value;
}

double AccuracyEstimator::predict(const AccuracyFeature& feature) const {
  if (static_cast<int>(feature.values.size()) != dimension_) {
    throw Error(ErrorKind::dimension_mismatch, "feature has " + std::to_string(feature.values.size()) +
                                                   " values, estimator expects " + std::to_string(dimension_));
  }
  double y = intercept_;
  for (int j = 0; j < dimension_; ++j) y += weights_[static_cast<std::size_t>(j)] * feature.values[static_cast<std::size_t>(j)];
  for (const auto& tree : trees_) y += learning_rate_ * tree_value(tree, feature.values);
  return std::clamp(y, 0.0, 100.0);
}

namespace {

using Matrix = std::vector<std::vector<double>>;

struct TreeBuilder {
  const Matrix& x;
  const std::vector<double>& residual;
  int max_depth;
  int min_leaf;

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  Split best_split(const std::vector<std::size_t>& rows) const {
    Split best;
    const std::size_t n = rows.size();
    if (n < 2 * static_cast<std::size_t>(min_leaf)) return best;
    double total = 0.0;
    for (auto r : rows) total += residual[r];
    const std::size_t dims = x.front().size();
    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < dims; ++f) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += residual[order[i]];
        const double here = x[order[i]][f];
        const double next = x[order[i + 1]][f];
        if (here == next) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
        const double right_sum = total - left_sum;
        // SSE reduction relative to a single leaf.
        const double gain = left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr) -
                            total * total / static_cast<double>(n);
        if (gain > best.gain + 1e-12) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (here + next);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  template <typename Node>
  int build(std::vector<Node>& tree, const std::vector<std::size_t>& rows, int depth) const {
    const int idx = static_cast<int>(tree.size());
    tree.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += residual[r];
    tree[static_cast<std::size_t>(idx)].value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    if (depth >= max_depth) return idx;
    const Split split = best_split(rows);
    if (split.feature < 0) return idx;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (x[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    tree[static_cast<std::size_t>(idx)].feature = split.feature;
    tree[static_cast<std::size_t>(idx)].threshold = split.threshold;
    const int l = build(tree, left, depth + 1);
    const int r = build(tree, right, depth + 1);
    tree[static_cast<std::size_t>(idx)].left = l;
    tree[static_cast<std::size_t>(idx)].right = r;
    return idx;
  }
};

}  // namespace

AccuracyEstimator train_accuracy_estimator(std::span<const TrainingSample> samples, const BoostParams& params,
                                           std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorKind::empty_samples, "accuracy estimator needs at least one sample");
  if (params.rounds < 0 || params.max_depth < 0 || params.min_leaf < 1 || params.learning_rate < 0 ||
      params.ridge < 0 || !(params.subsample > 0 && params.subsample <= 1)) {
    throw Error(ErrorKind::invalid_parameter, "invalid boosting parameters");
  }
  const std::size_t dims = samples.front().feature.values.size();
  if (dims == 0) throw Error(ErrorKind::dimension_mismatch, "empty accuracy feature");
  const std::size_t n = samples.size();

  Matrix x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].feature.values.size() != dims) {
      throw Error(ErrorKind::dimension_mismatch, "training features differ in length");
    }
    if (!(samples[i].accuracy >= 0 && samples[i].accuracy <= 100)) {
      throw Error(ErrorKind::invalid_parameter, "training accuracy outside [0,100]");
    }
    x[i] = samples[i].feature.values;
    y[i] = samples[i].accuracy;
  }

  AccuracyEstimator est;
  est.dimension_ = static_cast<int>(dims);
  est.sample_count_ = static_cast<int>(n);
  est.seed_ = seed;
  est.learning_rate_ = params.learning_rate;
  est.degenerate_ = std::all_of(x.begin(), x.end(), [&](const auto& row) { return row == x.front(); });

  // Ridge on centred data; the intercept is not penalised, so a single sample
  // (or identical features) reduces to predicting the label mean.
  Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) mean_x(static_cast<Eigen::Index>(j)) += x[i][j];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  Eigen::MatrixXd xc(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
  Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j] - mean_x(static_cast<Eigen::Index>(j));
    }
    yc(static_cast<Eigen::Index>(i)) = y[i] - mean_y;
  }
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += std::max(params.ridge, 1e-12);
  const Eigen::VectorXd w = gram.ldlt().solve(xc.transpose() * yc);
  est.weights_.assign(w.data(), w.data() + w.size());
  est.intercept_ = mean_y - w.dot(mean_x);

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pred = est.intercept_;
    for (std::size_t j = 0; j < dims; ++j) pred += est.weights_[j] * x[i][j];
    residual[i] = y[i] - pred;
  }

  Rng rng(derive_seed(seed, {0xB005}));
  TreeBuilder builder{x, residual, params.max_depth, params.min_leaf};
  for (int round = 0; round < params.rounds; ++round) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (params.subsample >= 1.0 || rng.uniform01() < params.subsample) rows.push_back(i);
    }
    if (rows.empty()) continue;
    std::vector<AccuracyEstimator::Node> tree;
    builder.build(tree, rows, 0);
    for (std::size_t i = 0; i < n; ++i) residual[i] -= params.learning_rate * est.tree_value(tree, x[i]);
    est.trees_.push_back(std::move(tree));
  }
  return est;
}

std::vector<TrainingSample> sample_training_set(const Task& task, const ProfileTable& table, int count,
                                                std::uint64_t seed, std::vector<StitchMap>* maps_out) {
  if (count < 1) throw Error(ErrorKind::empty_samples, "training set size must be >= 1");
  const auto total = checked_pow(static_cast<std::uint64_t>(task.variant_count),
                                 static_cast<std::uint64_t>(task.subgraph_count), "sample_training_set");
  const auto want = std::min<std::uint64_t>(static_cast<std::uint64_t>(count), total);
  // Floyd's algorithm: `want` distinct ranks, uniformly.
  Rng rng(derive_seed(seed, {4, static_cast<std::uint64_t>(task.task_id)}));
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = total - want; j < total; ++j) {
    const auto r = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(j)));
    if (!chosen.insert(r).second) chosen.insert(j);
  }
  std::vector<TrainingSample> out;
  out.reserve(chosen.size());
  for (auto rank : chosen) {
    StitchMap m = stitch_unrank(task.task_id, rank, task.variant_count, task.subgraph_count);
    out.push_back(TrainingSample{extract_features(m, table), table.stitched_truth(m)});
    if (maps_out) maps_out->push_back(std::move(m));
  }
  return out;
}

double estimate_latency(const StitchMap& map, const PlacementOrder& order, const ProfileTable& table, double comm_ms) {
  if (order.procs.size() != map.donors.size()) {
    throw Error(ErrorKind::dimension_mismatch, "placement order length differs from the number of subgraphs");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < map.donors.size(); ++j) {
    total += table.latency(map.task_id, map.donors[j], static_cast<int>(j) + 1, order.procs[j]);
  }
  if (!map.donors.empty()) total += comm_ms * static_cast<double>(map.donors.size() - 1);
  return total;
}

std::uint64_t profiling_cost(std::uint64_t tasks, std::uint64_t variants, std::uint64_t subgraphs,
                             std::uint64_t processors, bool with_stitching, bool with_estimators) {
  if (tasks < 1 || variants < 1 || subgraphs < 1 || processors < 1) {
    throw Error(ErrorKind::invalid_argument, "profiling_cost: T, V, S, P must be >= 1");
  }
  constexpr const char* what = "profiling_cost";
  if (with_estimators) {
    const auto accuracy_runs = checked_mul(tasks, variants, what);
    const auto latency_runs = checked_mul(checked_mul(checked_mul(tasks, subgraphs, what), variants, what), processors, what);
    return checked_add(accuracy_runs, latency_runs, what);
  }
  const auto orders_plus_one = checked_add(checked_factorial(processors, what), 1, what);
  const auto variant_count = with_stitching ? checked_pow(variants, subgraphs, what) : variants;
  return checked_mul(checked_mul(tasks, variant_count, what), orders_plus_one, what);
}

std::uint64_t estimator_training_runs(std::uint64_t tasks, std::uint64_t samples_per_task) {
  return checked_mul(tasks, samples_per_task, "estimator_training_runs");
}

namespace {
std::vector<std::size_t> top_indices(std::span<const double> score, std::span<const StitchMap> maps, std::size_t k) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return maps[a] < maps[b];
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}
}  // namespace

double top_k_recall(std::span<const double> predicted, std::span<const double> truth, std::span<const StitchMap> maps,
                    int k) {
  if (k <= 0) throw Error(ErrorKind::invalid_k, "K must be positive");
  if (predicted.size() != truth.size() || predicted.size() != maps.size()) {
    throw Error(ErrorKind::length_mismatch, "top_k_recall inputs differ in length");
  }
  if (static_cast<std::size_t>(k) > maps.size()) {
    throw Error(ErrorKind::invalid_k, "K exceeds the number of candidates");
  }
  const auto p = top_indices(predicted, maps, static_cast<std::size_t>(k));
  const auto t = top_indices(truth, maps, static_cast<std::size_t>(k));
  std::vector<std::size_t> both;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(k);
}

double top_k_recall(const AccuracyEstimator& est, std::span<const StitchMap> candidates, const ProfileTable& table,
                    int k) {
  std::vector<double> predicted, truth;
  predicted.reserve(candidates.size());
  truth.reserve(candidates.size());
  for (const auto& m : candidates) {
    predicted.push_back(est.predict(extract_features(m, table)));
    truth.push_back(table.stitched_truth(m));
  }
  return top_k_recall(predicted, truth, candidates, k);
}

LatencyError latency_error(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw Error(ErrorKind::length_mismatch, "latency_error needs equal-length, non-empty inputs");
  }
  LatencyError e;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!(truths[i] >= 1e-9)) throw Error(ErrorKind::zero_truth, "latency truth below 1e-9 ms at index " + std::to_string(i));
    const double abs_err = std::abs(estimates[i] - truths[i]);
    e.mae_ms += abs_err;
    e.mape += abs_err / truths[i];
  }
  e.mae_ms /= static_cast<double>(estimates.size());
  e.mape /= static_cast<double>(estimates.size());
  return e;
}

}  // namespace loom
