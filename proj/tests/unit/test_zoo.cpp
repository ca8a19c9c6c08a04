#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "loom/errors.hpp"
#include "loom/zoo.hpp"

using namespace loom;

TEST_CASE("enumerate_stitched counts and orders donor vectors") {
  CHECK(enumerate_stitched(Task{1, "t", 10, 3}).size() == 1000);

  const auto single = enumerate_stitched(Task{1, "t", 1, 4});
  REQUIRE(single.size() == 1);
  CHECK(single[0].donors == std::vector<int>{1, 1, 1, 1});

  const auto maps = enumerate_stitched(Task{2, "t", 3, 2});
  REQUIRE(maps.size() == 9);
  std::vector<std::vector<int>> expected;
  for (int a = 1; a <= 3; ++a) {
    for (int b = 1; b <= 3; ++b) expected.push_back({a, b});
  }
  for (std::size_t k = 0; k < maps.size(); ++k) {
    CHECK(maps[k].task_id == 2);
    CHECK(maps[k].donors == expected[k]);
  }
}

TEST_CASE("enumeration is duplicate-free and repeatable") {
  const Task t{1, "t", 4, 3};
  const auto a = enumerate_stitched(t);
  const auto b = enumerate_stitched(t);
  CHECK(a == b);
  std::set<std::vector<int>> seen;
  for (const auto& m : a) seen.insert(m.donors);
  CHECK(seen.size() == 64);
}

TEST_CASE("resolve_subgraphs substitutes per position") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 3);
  const auto& variants = zoo.task(1).variants;

  const auto s = resolve_subgraphs(StitchMap{1, {2, 1, 2}}, variants);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == variants[1].subgraphs[0]);
  CHECK(s[1] == variants[0].subgraphs[1]);
  CHECK(s[2] == variants[1].subgraphs[2]);

  CHECK(resolve_subgraphs(StitchMap{1, {1, 1, 1}}, variants) == variants[0].subgraphs);

  try {
    resolve_subgraphs(StitchMap{1, {4, 1, 1}}, variants);
    FAIL("expected missing_variant");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_variant);
  }
}

TEST_CASE("resolved positions run 1..S for every stitched map") {
  const Zoo zoo = fixtures::flat_zoo(1, 3, 4);
  for (const auto& m : enumerate_stitched(zoo.task(1).task)) {
    const auto s = resolve_subgraphs(m, zoo.task(1).variants);
    for (std::size_t j = 0; j < s.size(); ++j) {
      CHECK(s[j].position == static_cast<int>(j) + 1);
      CHECK(s[j].variant_index == m.donors[j]);
    }
  }
}

TEST_CASE("constant maps reproduce exactly the original zoo") {
  const Zoo zoo = intel_template_zoo();
  for (const TaskZoo& tz : zoo.tasks()) {
    std::vector<std::vector<Subgraph>> from_constant;
    for (const auto& m : enumerate_stitched(tz.task)) {
      if (m.is_constant()) from_constant.push_back(resolve_subgraphs(m, tz.variants));
    }
    REQUIRE(from_constant.size() == tz.variants.size());
    for (std::size_t i = 0; i < tz.variants.size(); ++i) CHECK(from_constant[i] == tz.variants[i].subgraphs);
  }
}

TEST_CASE("stitched_variant_count") {
  CHECK(stitched_variant_count(4, 10, 3) == 4000);
  CHECK(stitched_variant_count(1, 1, 1) == 1);
  CHECK(stitched_variant_count(2, 5, 4) == 1250);
  try {
    stitched_variant_count(4, 10, 40);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::overflow);
  }
}

TEST_CASE("rank and unrank are inverse and follow enumeration order") {
  const Task t{3, "t", 5, 3};
  std::uint64_t k = 0;
  for (const auto& m : enumerate_stitched(t)) {
    CHECK(stitch_rank(m, 5) == k);
    CHECK(stitch_unrank(3, k, 5, 3) == m);
    ++k;
  }
}

TEST_CASE("zoo validation rejects malformed input") {
  const Zoo base = fixtures::flat_zoo(2, 2, 2);
  auto tasks = std::vector<TaskZoo>(base.tasks().begin(), base.tasks().end());
  SUBCASE("gap in task ids") {
    tasks[1].task.task_id = 3;
    for (auto& v : tasks[1].variants) v.task_id = 3;
    CHECK_THROWS_AS(Zoo{tasks}, Error);
  }
  SUBCASE("variant with the wrong subgraph count") {
    tasks[0].variants[1].subgraphs.pop_back();
    CHECK_THROWS_AS(Zoo{tasks}, Error);
  }
  SUBCASE("variant count disagrees with the task") {
    tasks[0].task.variant_count = 3;
    CHECK_THROWS_AS(Zoo{tasks}, Error);
  }
}

TEST_CASE("template zoos have the evaluation shape") {
  const Zoo intel = intel_template_zoo();
  CHECK(intel.task_count() == 4);
  for (const TaskZoo& tz : intel.tasks()) {
    CHECK(tz.task.variant_count == 10);
    CHECK(tz.task.subgraph_count == 3);
    CHECK(tz.variants[0].sparsity_kind == SparsityKind::dense);
    CHECK(tz.variants[0].precision == Precision::fp32);
    CHECK(tz.variants[0].sparsity_level == 0.0);
  }
  const Zoo jetson = jetson_template_zoo();
  CHECK(jetson.task_count() == 4);
  for (const TaskZoo& tz : jetson.tasks()) {
    CHECK(tz.task.variant_count == 10);
    CHECK(tz.task.subgraph_count == 2);
  }
  const Zoo custom = custom_zoo(3, 7, 4);
  CHECK(custom.task_count() == 3);
  CHECK(custom.task(3).variants.size() == 7);
}

TEST_CASE("subgraph memory scales with density and precision width") {
  CHECK(scaled_subgraph_memory(100'000'000, 0.0, Precision::fp32) == 100'000'000);
  CHECK(scaled_subgraph_memory(100'000'000, 0.0, Precision::int8) == 25'000'000);
  CHECK(scaled_subgraph_memory(100'000'000, 0.0, Precision::fp16) == 50'000'000);
  CHECK(scaled_subgraph_memory(100'000'000, 0.75, Precision::fp32) == 25'000'000);
}

TEST_CASE("format_donors and enum names") {
  CHECK(format_donors(StitchMap{1, {2, 1, 2}}) == "2-1-2");
  CHECK(parse_precision(to_string(Precision::int8)) == Precision::int8);
  CHECK(parse_sparsity_kind(to_string(SparsityKind::structured_pruned)) == SparsityKind::structured_pruned);
  CHECK_THROWS_AS(parse_precision("FP64"), Error);
}
