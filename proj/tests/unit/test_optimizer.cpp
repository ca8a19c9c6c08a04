#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "loom/errors.hpp"
#include "loom/optimizer.hpp"

using namespace loom;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SloConfig uniform_slo(const Zoo& zoo, double floor, double ceiling) {
  SloConfig c{1, {}};
  for (const TaskZoo& tz : zoo.tasks()) c.per_task[tz.task.task_id] = {floor, ceiling};
  return c;
}

// Brute force over orders x every combination of one map per non-empty set.
double brute_force_objective(const FeasibleSets& sets, const LatencyModel& lat,
                             std::span<const PlacementOrder> orders, PlacementOrder* best_order) {
  std::vector<const std::vector<StitchMap>*> nonempty;
  for (const auto& [t, maps] : sets) {
    if (!maps.empty()) nonempty.push_back(&maps);
  }
  double best = kInf;
  for (const PlacementOrder& o : orders) {
    std::vector<std::size_t> pick(nonempty.size(), 0);
    while (true) {
      double sum = 0.0;
      for (std::size_t k = 0; k < nonempty.size(); ++k) sum += lat.latency((*nonempty[k])[pick[k]], o);
      const double mean = sum / static_cast<double>(nonempty.size());
      if (mean < best) {
        best = mean;
        if (best_order) *best_order = o;
      }
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == nonempty[k]->size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
  }
  return best;
}

struct RandomInstance {
  Zoo zoo;
  ProfileTable table;
};

RandomInstance random_instance(std::uint64_t seed, int T, int V, int S, int P) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(1.0, 10.0), acc(60.0, 95.0);
  std::map<std::tuple<int, int, int, int>, double> lats;
  std::map<std::pair<int, int>, double> accs;
  for (int t = 1; t <= T; ++t) {
    for (int i = 1; i <= V; ++i) {
      accs[{t, i}] = acc(rng);
      for (int j = 1; j <= S; ++j) {
        for (int p = 1; p <= P; ++p) lats[{t, i, j, p}] = lat(rng);
      }
    }
  }
  Zoo zoo = fixtures::flat_zoo(T, V, S);
  ProfileTable table = fixtures::hand_table(
      zoo, P, [&](int t, int i, int j, int p) { return lats.at({t, i, j, p}); },
      [&](int t, int i) { return accs.at({t, i}); });
  return {std::move(zoo), std::move(table)};
}

}  // namespace

TEST_CASE("filter_feasible with vacuous and impossible constraints") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 2);
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [](int, int i, int j, int p) { return i * j + p; }, [](int, int i) { return 70.0 + i; });
  const auto orders = enumerate_orders(2, 2);
  const auto maps = enumerate_stitched(zoo.task(1).task);
  const TruthAccuracy acc(t);
  const ProfileLatency lat(t);
  CHECK(filter_feasible(maps, acc, lat, {0.0, kInf}, orders) == maps);
  CHECK(filter_feasible(maps, acc, lat, {73.5, kInf}, orders).empty());
  CHECK_THROWS_AS(filter_feasible(maps, acc, lat, {0.0, kInf}, {}), Error);
}

TEST_CASE("filter_feasible keeps a map that fits under any single order") {
  // v1 = (1,1), v2 = (2,2); orders A=(1,2), B=(2,1); ceiling 10.
  const Zoo zoo = fixtures::flat_zoo(1, 2, 2);
  const double L[2][2][2] = {{{2, 9}, {9, 2}},   // v1: pos1 {p1,p2}, pos2 {p1,p2}
                             {{6, 6}, {6, 6}}};  // v2
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [&](int, int i, int j, int p) { return L[i - 1][j - 1][p - 1]; }, [](int, int) { return 80.0; });
  const std::vector<StitchMap> cands{{1, {1, 1}}, {1, {2, 2}}};
  const std::vector<PlacementOrder> orders{{{1, 2}}, {{2, 1}}};
  const ProfileLatency lat(t);
  const TaskSlo slo{0.0, 10.0};

  std::vector<StitchMap> oracle;
  for (const StitchMap& m : cands) {
    bool ok = false;
    for (const auto& o : orders) {
      double s = 0.0;
      for (int j = 0; j < 2; ++j) s += L[m.donors[j] - 1][j][o.procs[static_cast<std::size_t>(j)] - 1];
      ok = ok || s <= slo.lat_ceiling_ms;
    }
    if (ok) oracle.push_back(m);
  }
  const auto got = filter_feasible(cands, TruthAccuracy(t), lat, slo, orders);
  CHECK(got == oracle);
  CHECK(got == std::vector<StitchMap>{{1, {1, 1}}});
}

TEST_CASE("choose_order on the six-order ResNet fixture") {
  const FixtureLatency lat(resnet_order_fixture(), "DPQ", "CGN");
  const auto orders = enumerate_orders(3, 3);
  REQUIRE(orders.size() == 6);
  const FeasibleSets sets{{1, {lat.map_for(1, "P-Q-P")}}};
  const OrderChoice c = choose_order(sets, lat, orders);
  CHECK(lat.order_label(c.order) == "C-G-N");
  CHECK(c.mean_latency_ms == 11.01);

  // A single order is returned whatever its latency.
  const std::vector<PlacementOrder> one{lat.order_for("G-C-N")};
  CHECK(choose_order(sets, lat, one).order == one.front());

  // P-P-Q is fastest under C-N-G.
  const FeasibleSets ppq{{1, {lat.map_for(1, "P-P-Q")}}};
  CHECK(lat.order_label(choose_order(ppq, lat, orders).order) == "C-N-G");
}

TEST_CASE("choose_order ties go to the lower processor sequence") {
  const Zoo zoo = fixtures::flat_zoo(1, 1, 2);
  const ProfileTable t = fixtures::hand_table(zoo, 3, [](int, int, int, int) { return 4.0; }, [](int, int) { return 80.0; });
  const auto orders = enumerate_orders(3, 2);
  std::vector<PlacementOrder> reversed(orders.rbegin(), orders.rend());
  const FeasibleSets sets{{1, {{1, {1, 1}}}}};
  CHECK(choose_order(sets, ProfileLatency(t), reversed).order == PlacementOrder{{1, 2}});
}

TEST_CASE("choose_order excludes empty sets and rejects all-empty input") {
  const Zoo zoo = fixtures::flat_zoo(2, 2, 2);
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [](int, int i, int j, int p) { return i + 2 * j * p; }, [](int, int) { return 80.0; });
  const auto orders = enumerate_orders(2, 2);
  const ProfileLatency lat(t);
  const FeasibleSets with_empty{{1, {{1, {2, 1}}}}, {2, {}}};
  const FeasibleSets alone{{1, {{1, {2, 1}}}}};
  for (const auto& o : orders) CHECK(order_objective(with_empty, lat, o) == order_objective(alone, lat, o));
  const FeasibleSets none{{1, {}}, {2, {}}};
  try {
    choose_order(none, lat, orders);
    FAIL("expected all_infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::all_infeasible);
  }
}

TEST_CASE("choose_order matches brute force on T=2, V=2, S=2, P=2") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = random_instance(seed, 2, 2, 2, 2);
    const auto orders = enumerate_orders(2, 2);
    const ProfileLatency lat(inst.table);
    FeasibleSets sets;
    for (int t = 1; t <= 2; ++t) sets[t] = enumerate_stitched(inst.zoo.task(t).task);
    PlacementOrder oracle_order;
    const double oracle = brute_force_objective(sets, lat, orders, &oracle_order);
    const OrderChoice c = choose_order(sets, lat, orders);
    CHECK(c.mean_latency_ms == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(c.order == oracle_order);
  }
}

TEST_CASE("select_final_variants") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 1);
  // Latency under processor 1: v1=11, v2=9, v3=9; under processor 2: v1=5.
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [](int, int i, int, int p) { return p == 1 ? (i == 1 ? 11.0 : 9.0) : (i == 1 ? 5.0 : 12.0); },
      [](int, int) { return 80.0; });
  const ProfileLatency lat(t);
  const PlacementOrder p1{{1}};
  SloConfig slo{1, {{1, {0.0, 10.0}}}};

  auto r = select_final_variants({{1, {{1, {1}}}}}, lat, PlacementOrder{{2}}, slo);
  CHECK(r.at(1).status == ChoiceStatus::chosen);
  CHECK(r.at(1).map->donors == std::vector<int>{1});

  r = select_final_variants({{1, {{1, {1}}, {1, {3}}, {1, {2}}}}}, lat, p1, slo);
  CHECK(r.at(1).map->donors == std::vector<int>{2});  // 9 ms; ties to the lower donor vector
  CHECK(r.at(1).latency_ms == 9.0);

  // Feasible only under processor 2 (5 ms); 11 ms under p1 breaks the 10 ms ceiling.
  r = select_final_variants({{1, {{1, {1}}}}}, lat, p1, slo);
  CHECK(r.at(1).status == ChoiceStatus::infeasible_under_order);
  CHECK_FALSE(r.at(1).feasible());
  CHECK(to_string(r.at(1).status) == "infeasible_under_order");

  r = select_final_variants({{1, {}}}, lat, p1, slo);
  CHECK(r.at(1).status == ChoiceStatus::no_feasible_variant);
  CHECK_FALSE(r.at(1).map.has_value());
}

TEST_CASE("plan matches exhaustive search on random instances") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const int T = 1 + static_cast<int>(seed % 3), V = 2 + static_cast<int>(seed % 2);
    const auto inst = random_instance(seed, T, V, 3, 3);
    const auto orders = enumerate_orders(3, 3);
    const ProfileLatency lat(inst.table);
    const TruthAccuracy acc(inst.table);
    // Ceiling between the fastest and slowest map so Θ is a proper subset.
    const SloConfig slo = uniform_slo(inst.zoo, 70.0, 16.0);

    FeasibleSets oracle_sets;
    for (int t = 1; t <= T; ++t) {
      for (const StitchMap& m : enumerate_stitched(inst.zoo.task(t).task)) {
        if (inst.table.stitched_truth(m) < 70.0) continue;
        bool ok = false;
        for (const auto& o : orders) ok = ok || estimate_latency(m, o, inst.table) <= 16.0;
        if (ok) oracle_sets[t].push_back(m);
      }
      oracle_sets.try_emplace(t);
    }
    const bool any = std::any_of(oracle_sets.begin(), oracle_sets.end(), [](const auto& kv) { return !kv.second.empty(); });
    if (!any) {
      CHECK_THROWS_AS(plan(inst.zoo, acc, lat, slo, orders), Error);
      continue;
    }
    const PlanResult r = plan(inst.zoo, acc, lat, slo, orders);
    const double oracle = brute_force_objective(oracle_sets, lat, orders, nullptr);
    CHECK(r.objective_ms == doctest::Approx(oracle).epsilon(1e-12));

    // Order optimality and chosen-variant optimality.
    for (const auto& o : orders) CHECK(r.objective_ms <= *order_objective(oracle_sets, lat, o));
    for (const auto& [t, c] : r.per_task) {
      if (!c.map) continue;
      for (const StitchMap& m : oracle_sets.at(t)) CHECK(c.latency_ms <= estimate_latency(m, r.best_order, inst.table));
    }
    // mean_latency_ms is the mean over surviving choices.
    double sum = 0.0;
    int n = 0;
    for (const auto& [t, c] : r.per_task) {
      if (c.feasible()) {
        sum += estimate_latency(*c.map, r.best_order, inst.table);
        ++n;
      }
    }
    CHECK(r.mean_latency_ms == doctest::Approx(n ? sum / n : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("loose SLOs pick each task's global minimum under the chosen order") {
  const auto inst = random_instance(7, 3, 3, 3, 3);
  const auto orders = enumerate_orders(3, 3);
  const ProfileLatency lat(inst.table);
  const PlanResult r = plan(inst.zoo, TruthAccuracy(inst.table), lat, uniform_slo(inst.zoo, 0.0, kInf), orders);
  CHECK(r.infeasible_tasks() == 0);
  CHECK(r.empty_feasible_tasks == 0);
  for (const auto& [t, c] : r.per_task) {
    double best = kInf;
    for (const StitchMap& m : enumerate_stitched(inst.zoo.task(t).task)) best = std::min(best, lat.latency(m, r.best_order));
    CHECK(c.latency_ms == best);
  }
  CHECK(r.objective_ms == doctest::Approx(r.mean_latency_ms).epsilon(1e-12));
}

TEST_CASE("SLO reachable only by original variants restricts the plan to constant maps") {
  // V=2, S=2: accuracies 90 and 70, mixed maps average to 80. Floor 85 leaves only (1,1).
  const Zoo zoo = fixtures::flat_zoo(1, 2, 2);
  const ProfileTable t = fixtures::hand_table(
      zoo, 2, [](int, int i, int, int p) { return i == 1 ? 3.0 + p : 1.0; }, [](int, int i) { return i == 1 ? 90.0 : 70.0; });
  const auto orders = enumerate_orders(2, 2);
  const SloConfig slo{1, {{1, {85.0, 100.0}}}};
  const PlanResult r = plan(zoo, TruthAccuracy(t), ProfileLatency(t), slo, orders);
  REQUIRE(r.per_task.at(1).feasible());
  CHECK(r.per_task.at(1).map->donors == std::vector<int>{1, 1});
  CHECK(r.per_task.at(1).map->is_constant());
  CHECK(r.per_task.at(1).latency_ms == 9.0);
}

TEST_CASE("stitched candidates dominate original candidates") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const auto inst = random_instance(seed, 3, 3, 3, 3);
    const auto orders = enumerate_orders(3, 3);
    const ProfileLatency lat(inst.table);
    const TruthAccuracy acc(inst.table);
    const SloConfig slo = uniform_slo(inst.zoo, 80.0, 14.0);
    const auto st = compute_feasible_sets(inst.zoo, acc, lat, slo, orders, CandidateSet::stitched);
    const auto og = compute_feasible_sets(inst.zoo, acc, lat, slo, orders, CandidateSet::original);
    int empty_st = 0, empty_og = 0;
    for (const auto& [tid, maps] : og) {
      for (const StitchMap& m : maps) CHECK(std::find(st.at(tid).begin(), st.at(tid).end(), m) != st.at(tid).end());
      empty_og += maps.empty();
      empty_st += st.at(tid).empty();
    }
    CHECK(empty_st <= empty_og);
  }
}

TEST_CASE("plan is deterministic and reports missing SLO entries") {
  const auto inst = random_instance(3, 2, 3, 3, 3);
  const auto orders = enumerate_orders(3, 3);
  const ProfileLatency lat(inst.table);
  const TruthAccuracy acc(inst.table);
  const SloConfig slo = uniform_slo(inst.zoo, 60.0, 20.0);
  const PlanResult a = plan(inst.zoo, acc, lat, slo, orders), b = plan(inst.zoo, acc, lat, slo, orders);
  CHECK(a.best_order == b.best_order);
  CHECK(a.objective_ms == b.objective_ms);
  for (const auto& [t, c] : a.per_task) CHECK(c.map == b.per_task.at(t).map);

  const SloConfig partial{2, {{1, {60.0, 20.0}}}};
  try {
    plan(inst.zoo, acc, lat, partial, orders);
    FAIL("expected missing_key");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_key);
  }
}

TEST_CASE("predicted accuracy returns measured values for original variants") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 2);
  const ProfileTable t = fixtures::hand_table(zoo, 2, [](int, int, int, int) { return 1.0; },
                                              [](int, int i) { return 60.0 + 10.0 * i; });
  const auto samples = sample_training_set(zoo.task(1).task, t, 9, 1);
  std::map<int, AccuracyEstimator> ests;
  ests.emplace(1, train_accuracy_estimator(samples, BoostParams{}, 1));
  const PredictedAccuracy pred(t, std::move(ests));
  for (int i = 1; i <= 3; ++i) CHECK(pred.accuracy(constant_map(1, i, 2)) == t.variant_accuracy(1, i));
  CHECK(std::abs(pred.accuracy({1, {1, 3}}) - 80.0) <= 1.0);
  const PredictedAccuracy empty(t, {});
  CHECK_THROWS_AS(empty.accuracy({1, {1, 3}}), Error);
}

TEST_CASE("empty_plan marks every task infeasible") {
  const FeasibleSets sets{{1, {}}, {4, {}}};
  const PlanResult r = empty_plan(sets, 9);
  CHECK(r.config_id == 9);
  CHECK(r.empty_feasible_tasks == 2);
  CHECK(r.infeasible_tasks() == 2);
  CHECK(r.per_task.at(4).status == ChoiceStatus::no_feasible_variant);
}
