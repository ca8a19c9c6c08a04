#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "loom/errors.hpp"
#include "loom/preloader.hpp"

using namespace loom;

namespace {

Zoo sized_zoo(std::mt19937_64& rng, int T, int V, int S) {
  std::uniform_int_distribution<Bytes> mem(1, 40);
  std::vector<TaskZoo> tasks;
  for (int t = 1; t <= T; ++t) {
    TaskZoo tz{{t, "t" + std::to_string(t), V, S}, {}};
    for (int i = 1; i <= V; ++i) {
      SparseVariant v{t, i, SparsityKind::dense, 0.0, Precision::fp32, {}};
      for (int j = 1; j <= S; ++j) v.subgraphs.push_back({t, i, j, mem(rng)});
      tz.variants.push_back(v);
    }
    tasks.push_back(tz);
  }
  return Zoo(std::move(tasks));
}

HotnessTable random_hotness(std::mt19937_64& rng, const Zoo& zoo) {
  std::uniform_int_distribution<int> h(0, 4);  // coarse values force ties
  HotnessTable table;
  table.config_count = 4;
  for (const TaskZoo& tz : zoo.tasks()) {
    for (const SparseVariant& v : tz.variants) {
      for (const Subgraph& s : v.subgraphs) {
        const int score = h(rng);
        if (score) table.scores[{s.task_id, s.variant_index, s.position}] = score;
      }
    }
  }
  return table;
}

}  // namespace

TEST_CASE("hotness of the two-config instance") {
  // Θ(σ1) = {m1, m2}, Θ(σ2) = {m1}; subgraph (v1 @ pos 1) is only in m1.
  const StitchMap m1{1, {1, 2}}, m2{1, {2, 2}};
  const std::vector<SatisfyingSet> sets{{1, 1, {m1, m2}}, {1, 2, {m1}}};
  const HotnessTable h = compute_hotness(sets);
  CHECK(h.config_count == 2);
  CHECK(h.score({1, 1, 1}) == 1.5);
  CHECK(h.score({1, 2, 1}) == 0.5);
  CHECK(h.score({1, 2, 2}) == 2.0);  // in every map of both configs
  CHECK(h.score({1, 1, 2}) == 0.0);
  CHECK(h.score({2, 1, 1}) == 0.0);
}

TEST_CASE("hotness: full presence and empty sets") {
  const StitchMap a{1, {3, 3}};
  const std::vector<SatisfyingSet> sets{{1, 1, {a}}, {1, 2, {a, a}}, {1, 3, {a}}, {1, 4, {}}};
  const HotnessTable h = compute_hotness(sets);
  CHECK(h.config_count == 4);
  CHECK(h.score({1, 3, 1}) == 3.0);
  CHECK(h.score({1, 3, 2}) == 3.0);
  CHECK(h.scores.size() == 2);
}

TEST_CASE("hotness stays within [0, config count]") {
  std::mt19937_64 rng(11);
  const Zoo zoo = fixtures::flat_zoo(2, 4, 3);
  for (int round = 0; round < 50; ++round) {
    std::vector<SatisfyingSet> sets;
    const int configs = 1 + static_cast<int>(rng() % 25);
    for (int c = 1; c <= configs; ++c) {
      for (int t = 1; t <= 2; ++t) {
        auto all = enumerate_stitched(zoo.task(t).task);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(rng() % 10);
        sets.push_back({t, c, all});
      }
    }
    const HotnessTable h = compute_hotness(sets);
    CHECK(h.config_count == configs);
    for (const auto& [k, v] : h.scores) {
      CHECK(v >= 0.0);
      CHECK(v <= configs + 1e-9);
    }
    // Per (task, config, position) the shares sum to 1 when the set is non-empty.
    for (int t = 1; t <= 2; ++t) {
      for (int j = 1; j <= 3; ++j) {
        double total = 0.0;
        int nonempty = 0;
        for (const auto& s : sets) nonempty += s.task_id == t && !s.maps.empty();
        for (int i = 1; i <= 4; ++i) total += h.score({t, i, j});
        CHECK(total == doctest::Approx(nonempty));
      }
    }
  }
}

TEST_CASE("satisfying_sets flattens configs") {
  const std::vector<SloConfig> configs{{4, {}}, {9, {}}};
  const std::vector<FeasibleSets> feasible{{{1, {{1, {1}}}}, {2, {}}}, {{1, {}}}};
  const auto s = satisfying_sets(configs, feasible);
  REQUIRE(s.size() == 3);
  CHECK(s[0].config_id == 4);
  CHECK(s[1].task_id == 2);
  CHECK(s[2].config_id == 9);
  const std::vector<FeasibleSets> short_list{{}};
  CHECK_THROWS_AS(satisfying_sets(configs, short_list), Error);
}

TEST_CASE("greedy preload manual trace: budget 15") {
  // One task, S=2, V=2, every subgraph 10 bytes; hotness favours v2@1 and v1@2.
  const Zoo zoo = fixtures::flat_zoo(1, 2, 2, 10);
  HotnessTable h;
  h.config_count = 1;
  h.scores = {{{1, 2, 1}, 0.9}, {{1, 1, 1}, 0.1}, {{1, 1, 2}, 0.8}, {{1, 2, 2}, 0.2}};
  for (int sweeps : {0, 1}) {
    const PreloadPlan p = greedy_preload(h, zoo, 15, {sweeps});
    CHECK(p.per_task.at(1) == std::set<SubgraphKey>{{1, 2, 1}});
    CHECK(p.total_mem_bytes == 10);
    CHECK(p.budget_bytes == 15);
  }
  // With 20 bytes both positions get their hottest subgraph.
  const PreloadPlan p20 = greedy_preload(h, zoo, 20);
  CHECK(p20.per_task.at(1) == std::set<SubgraphKey>{{1, 2, 1}, {1, 1, 2}});
}

TEST_CASE("greedy preload at full and zero budget") {
  const Zoo zoo = fixtures::flat_zoo(3, 4, 3, 7);
  HotnessTable h;
  h.scores[{2, 3, 2}] = 1.0;
  const Bytes full = full_preload_memory(zoo);
  CHECK(full == 3 * 4 * 3 * 7);

  const PreloadPlan single = greedy_preload(h, zoo, full, {1});
  for (const auto& [t, phi] : single.per_task) CHECK(phi.size() == 3);
  CHECK(single.contains({2, 3, 2}));
  CHECK(single.contains({1, 1, 1}));  // ties go to the lower variant index

  const PreloadPlan all = greedy_preload(h, zoo, full);
  const PreloadPlan ref = full_preload(zoo);
  CHECK(all.per_task == ref.per_task);
  CHECK(all.total_mem_bytes == full);

  const PreloadPlan none = greedy_preload(h, zoo, 0);
  CHECK(none.size() == 0);
  CHECK(none.per_task.size() == 3);
  CHECK_THROWS_AS(greedy_preload(h, zoo, 10, {-1}), Error);
}

TEST_CASE("each sweep admits at most one subgraph per position") {
  std::mt19937_64 rng(5);
  const Zoo zoo = sized_zoo(rng, 3, 5, 3);
  const HotnessTable h = random_hotness(rng, zoo);
  const Bytes full = full_preload_memory(zoo);
  for (int k = 1; k <= 5; ++k) {
    const PreloadPlan p = greedy_preload(h, zoo, full, {k});
    for (const auto& [t, phi] : p.per_task) {
      for (int j = 1; j <= 3; ++j) {
        CHECK(std::count_if(phi.begin(), phi.end(), [&](const SubgraphKey& s) { return s.position == j; }) ==
              std::min(k, 5));
      }
    }
  }
}

TEST_CASE("greedy preload never exceeds its budget") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 400; ++round) {
    const int T = 1 + static_cast<int>(rng() % 4), V = 1 + static_cast<int>(rng() % 6), S = 1 + static_cast<int>(rng() % 4);
    const Zoo zoo = sized_zoo(rng, T, V, S);
    const HotnessTable h = random_hotness(rng, zoo);
    const Bytes full = full_preload_memory(zoo);
    const Bytes budget = static_cast<Bytes>(rng() % static_cast<std::uint64_t>(full + 20));
    const PreloadPlan p = greedy_preload(h, zoo, budget, {static_cast<int>(rng() % 3)});
    Bytes sum = 0;
    for (const auto& [t, phi] : p.per_task) {
      for (const SubgraphKey& k : phi) {
        CHECK(k.task_id == t);
        sum += zoo.task(t).variants[static_cast<std::size_t>(k.variant_index - 1)].subgraphs[static_cast<std::size_t>(k.position - 1)].mem_bytes;
      }
    }
    CHECK(sum == p.total_mem_bytes);
    CHECK(p.total_mem_bytes <= budget);
  }
}

TEST_CASE("larger budgets keep earlier admissions when subgraph sizes are uniform") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 50; ++round) {
    const Zoo zoo = fixtures::flat_zoo(3, 4, 3, 8);
    const HotnessTable h = random_hotness(rng, zoo);
    const Bytes full = full_preload_memory(zoo);
    PreloadPlan prev = greedy_preload(h, zoo, 0);
    for (Bytes b = 4; b <= full; b += 4) {
      const PreloadPlan cur = greedy_preload(h, zoo, b);
      for (const auto& [t, phi] : prev.per_task) {
        CHECK(std::includes(cur.per_task.at(t).begin(), cur.per_task.at(t).end(), phi.begin(), phi.end()));
      }
      prev = cur;
    }
  }
}

TEST_CASE("budget_from_fraction") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 1, 33);  // 99 bytes
  CHECK(budget_from_fraction(zoo, 1.0) == 99);
  CHECK(budget_from_fraction(zoo, 0.0) == 0);
  CHECK(budget_from_fraction(zoo, 0.5) == 49);
  CHECK(budget_from_fraction(zoo, 0.15) == 14);
  CHECK_THROWS_AS(budget_from_fraction(zoo, 1.01), Error);
  CHECK_THROWS_AS(budget_from_fraction(zoo, -0.1), Error);
}

TEST_CASE("switch cost") {
  const Zoo zoo = fixtures::flat_zoo(1, 2, 2);
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [](int, int i, int j, int p) { return i == 1 && j == 1 && p == 2 ? 2.0 : 1.0; }, [](int, int) { return 80.0; });
  const StitchMap m{1, {1, 2}};
  const std::vector<int> placement{2, 1};

  PreloadPlan all = full_preload(zoo);
  CHECK(switch_cost(m, placement, &all, t) == 0.0);

  PreloadPlan partial;
  partial.per_task[1] = {{1, 2, 2}};
  CHECK(switch_cost(m, placement, &partial, t) == doctest::Approx(53.4).epsilon(1e-12));

  SwitchMultipliers mult{10.0, 2.0, true};
  const std::vector<int> ones{1, 1};
  CHECK(switch_cost(m, ones, nullptr, t, mult) == 24.0);
  mult.charge_compile = false;
  CHECK(switch_cost(m, ones, nullptr, t, mult) == 4.0);

  const std::vector<int> bad{1};
  CHECK_THROWS_AS(switch_cost(m, bad, nullptr, t), Error);
}
