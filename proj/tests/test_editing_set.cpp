#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mhke/editing_set.hpp"
#include "mhke/set_builder.hpp"

using namespace mhke;

namespace {

std::vector<MQRecord> corpus(int n) {
  std::vector<MQRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::make_record("r" + std::to_string(i), 2 + i % 3, 1 + i % 2));
  return out;
}

// Hamilton apportionment in exact integer arithmetic over ratios given in
// parts per `denom`.
std::array<size_t, 3> oracle_apportion(size_t n, std::array<size_t, 3> parts, size_t denom) {
  std::array<size_t, 3> counts{}, rem{};
  size_t assigned = 0;
  for (int b = 0; b < 3; ++b) {
    counts[b] = n * parts[b] / denom;
    rem[b] = n * parts[b] % denom;
    assigned += counts[b];
  }
  while (assigned < n) {
    int best = 0;
    for (int b = 1; b < 3; ++b)
      if (rem[b] > rem[best]) best = b;
    ++counts[best];
    rem[best] = 0;
    ++assigned;
  }
  return counts;
}

}  // namespace

TEST_CASE("pool deduplicates identical edits and keeps first refs") {
  auto recs = corpus(3);
  recs.push_back(recs[0]);
  recs.back().record_id = "copy";
  auto pool = build_edit_pool(recs);
  size_t expect = 0;
  for (int i = 0; i < 3; ++i) expect += recs[i].edits.size();
  CHECK(pool.edits.size() == expect);
  CHECK(pool.refs.front() == "r0#0");
  for (const auto& ref : pool.refs) CHECK(ref.rfind("copy", 0) != 0);
}

TEST_CASE("eval sets carry m*k distractors and all relevant edits") {
  auto recs = corpus(12);
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  for (const auto& r : recs) {
    for (size_t k : {0u, 1u, 2u}) {
      auto sel = select_eval_distractors(idx, pool, r, k);
      CHECK(sel.distractors.size() == r.edits.size() * k);
      CHECK(sel.warnings.empty());
      auto set = assemble_editing_set(r, sel.distractors, 42);
      CHECK(set.relevant_count() == r.edits.size());
      CHECK(set.distractor_count() == r.edits.size() * k);
      std::set<std::string> keys;
      for (const auto& e : set.entries) CHECK(keys.insert(subject_relation_key(e.edit)).second);
    }
  }
}

TEST_CASE("training sets have exactly the requested totals") {
  auto recs = corpus(12);
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  for (const auto& r : recs)
    for (size_t total : {0u, 2u, 4u}) CHECK(select_training_distractors(idx, pool, r, total).distractors.size() == total);
}

TEST_CASE("shortfall produces a warning, not an error") {
  auto recs = corpus(2);
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  auto sel = select_eval_distractors(idx, pool, recs[0], 5);
  CHECK(sel.distractors.size() < recs[0].edits.size() * 5);
  CHECK_FALSE(sel.warnings.empty());
}

TEST_CASE("a distractor overlapping a relevant edit is rejected") {
  auto r = testing::make_record("x", 3, 1);
  Edit clash = r.edits[0];
  clash.new_object = "Somewhere Else";
  CHECK_THROWS_AS(assemble_editing_set(r, {{clash, Provenance::distractor, "y#0"}}, 1), std::invalid_argument);
}

TEST_CASE("shuffle is a permutation fixed by the seed") {
  auto recs = corpus(8);
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  auto sel = select_eval_distractors(idx, pool, recs[1], 2);
  auto a = assemble_editing_set(recs[1], sel.distractors, 7);
  auto b = assemble_editing_set(recs[1], sel.distractors, 7);
  CHECK(a == b);
  auto c = assemble_editing_set(recs[1], sel.distractors, 8);
  CHECK(c.entries.size() == a.entries.size());
  for (const auto& e : a.entries) CHECK(std::find(c.entries.begin(), c.entries.end(), e) != c.entries.end());
}

TEST_CASE("apportion matches integer oracle") {
  CHECK(apportion(9218, {}) == std::array<size_t, 3>{8296, 461, 461});
  CHECK(apportion(20, {}) == std::array<size_t, 3>{18, 1, 1});
  for (size_t n = 1; n < 500; n += 7) {
    CAPTURE(n);
    CHECK(apportion(n, {}) == oracle_apportion(n, {90, 5, 5}, 100));
    CHECK(apportion(n, {0.5, 0.25, 0.25}) == oracle_apportion(n, {2, 1, 1}, 4));
  }
  CHECK_THROWS_AS(apportion(10, {0.5, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("training mixture plan has apportioned counts") {
  auto plan = plan_training_mixture(20, {}, 3);
  CHECK(std::count(plan.begin(), plan.end(), 0) == 18);
  CHECK(std::count(plan.begin(), plan.end(), 2) == 1);
  CHECK(std::count(plan.begin(), plan.end(), 4) == 1);
  CHECK(plan == plan_training_mixture(20, {}, 3));
}

TEST_CASE("set builders and JSON round trip") {
  auto recs = corpus(10);
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  auto rows = build_eval_sets(recs, idx, pool, {0, 1, 2}, 99);
  REQUIRE(rows.size() == 30);
  CHECK(rows[0].record_id == "r0");
  CHECK(rows[1].k == 1);
  CHECK(serialize_set_rows(rows) == serialize_set_rows(build_eval_sets(recs, idx, pool, {0, 1, 2}, 99)));
  for (const auto& row : rows) {
    auto back = set_row_from_json(to_json(row));
    CHECK(back.record_id == row.record_id);
    CHECK(back.k == row.k);
    CHECK(back.editing_set == row.editing_set);
  }
  auto train = build_training_sets(recs, idx, pool, {0.8, 0.1, 0.1}, 5);
  REQUIRE(train.size() == 10);
  int totals[5] = {};
  for (const auto& row : train) {
    CHECK(row.mode == SetMode::train);
    CHECK(static_cast<int>(row.editing_set.distractor_count()) == row.k);
    ++totals[row.k];
  }
  CHECK(totals[0] == 8);
  CHECK(totals[2] == 1);
  CHECK(totals[4] == 1);
}
