#pragma once

// Hand-built zoos and profile tables for tests.

#include <functional>
#include <vector>

#include "loom/estimator.hpp"
#include "loom/profiles.hpp"
#include "loom/zoo.hpp"

namespace fixtures {

using LatencyFn = std::function<double(int task, int variant, int position, int proc)>;
using AccuracyFn = std::function<double(int task, int variant)>;

// T tasks, V dense-tagged variants, S subgraphs of `mem` bytes each.
inline loom::Zoo flat_zoo(int T, int V, int S, loom::Bytes mem = 10) {
  std::vector<loom::TaskZoo> tasks;
  for (int t = 1; t <= T; ++t) {
    loom::TaskZoo tz{{t, "task" + std::to_string(t), V, S}, {}};
    for (int i = 1; i <= V; ++i) {
      loom::SparseVariant v{t, i, loom::SparsityKind::dense, 0.0, loom::Precision::fp32, {}};
      for (int j = 1; j <= S; ++j) v.subgraphs.push_back({t, i, j, mem});
      tz.variants.push_back(v);
    }
    tasks.push_back(tz);
  }
  return loom::Zoo(std::move(tasks));
}

// Stitched truth defaults to the exact mean of donor accuracies.
inline loom::ProfileTable hand_table(const loom::Zoo& zoo, int P, const LatencyFn& lat, const AccuracyFn& acc,
                                     bool with_truth = true) {
  loom::ProfileTable table(loom::default_processors(P), 0, loom::GenParams{});
  for (const loom::TaskZoo& tz : zoo.tasks()) {
    const int t = tz.task.task_id, V = tz.task.variant_count, S = tz.task.subgraph_count;
    table.add_task(t, V, S);
    for (int i = 1; i <= V; ++i) {
      table.set_variant_accuracy(t, i, acc(t, i));
      for (int j = 1; j <= S; ++j) {
        for (int p = 1; p <= P; ++p) table.set_latency(t, i, j, p, lat(t, i, j, p));
      }
    }
    if (!with_truth) continue;
    for (const loom::StitchMap& m : loom::enumerate_stitched(tz.task)) {
      double sum = 0.0;
      for (int d : m.donors) sum += acc(t, d);
      table.set_stitched_truth(m, m.is_constant() ? acc(t, m.donors.front()) : sum / S);
    }
  }
  return table;
}

}  // namespace fixtures
