#include "doctest.h"
#include "helpers.hpp"
#include "mhke/model.hpp"
#include "mhke/verbalize.hpp"

using namespace mhke;

TEST_CASE("validate_chain finds the first broken link") {
  HopChain c{{{"A", "r1", "B"}, {"B", "r2", "C"}, {"X", "r3", "D"}}};
  auto v = validate_chain(c);
  CHECK_FALSE(v.ok);
  REQUIRE(v.violation);
  CHECK(*v.violation == 1);
  c.hops[2].subject = "C";
  CHECK(validate_chain(c).ok);
  CHECK(validate_chain(HopChain{}).ok);
}

TEST_CASE("chain links compare after NFC and trimming") {
  HopChain c{{{"A", "r", "Cafe\xCC\x81"}, {" Caf\xC3\xA9", "r", "B"}}};
  CHECK(validate_chain(c).ok);
}

TEST_CASE("edit_in_chain uses relation ids when both sides have them") {
  HopChain c{{{"Roblin Park", "located in state", "New South Wales", "P131"}}};
  Edit by_id{"Roblin Park", "{} is located in", "Manitoba", "New South Wales", "P131"};
  CHECK(edit_in_chain(by_id, c));
  Edit other_id = by_id;
  other_id.relation_id = "P17";
  CHECK_FALSE(edit_in_chain(other_id, c));
  Edit by_text{"Roblin Park", "located in state", "Manitoba", "New South Wales", ""};
  CHECK(edit_in_chain(by_text, c));
  Edit wrong_object = by_text;
  wrong_object.new_object = "Victoria";
  CHECK_FALSE(edit_in_chain(wrong_object, c));
}

TEST_CASE("check_record on a well-formed record") {
  auto r = testing::make_record("r1", 3, 2);
  auto check = check_record(r);
  CHECK(check.errors.empty());
  CHECK(check.missing_edits.empty());
}

TEST_CASE("check_record reports each broken invariant") {
  auto r = testing::make_record("r1", 3, 2);
  r.post_edit_chain.hops[1].subject = "Elsewhere";
  CHECK_FALSE(check_record(r).errors.empty());

  r = testing::make_record("r1", 3, 2);
  r.gold_answer = "Wrong";
  CHECK_FALSE(check_record(r).errors.empty());

  r = testing::make_record("r1", 3, 2);
  r.hop_count = 4;
  CHECK_FALSE(check_record(r).errors.empty());

  r = testing::make_record("r1", 3, 2);
  r.edits[0].new_object = r.edits[0].old_object;
  CHECK_FALSE(check_record(r).errors.empty());

  r = testing::make_record("r1", 3, 2);
  r.edits.clear();
  CHECK_FALSE(check_record(r).errors.empty());

  r = testing::make_record("r1", 3, 1);
  r.edits[0].new_object = "Not In Chain";
  auto c = check_record(r);
  CHECK(c.errors.empty());
  CHECK(c.missing_edits.size() == 1);
}

TEST_CASE("corpus_stats counts cells, hop totals and edit totals") {
  std::vector<MQRecord> rs{testing::make_record("a", 2, 1), testing::make_record("b", 2, 2),
                           testing::make_record("c", 3, 1), testing::make_record("d", 4, 4),
                           testing::make_record("e", 4, 4)};
  auto s = corpus_stats(rs);
  CHECK(s.total == 5);
  CHECK(s.cell(2, 1) == 1);
  CHECK(s.cell(2, 2) == 1);
  CHECK(s.cell(3, 1) == 1);
  CHECK(s.cell(4, 4) == 2);
  CHECK(s.cell(3, 3) == 0);
  CHECK(s.hop_total(2) == 2);
  CHECK(s.hop_total(4) == 2);
  CHECK(s.by_edits.at(4) == 2);
  auto table = render_stats_table(s);
  CHECK(table.find("| All | 2 | 1 | 2 | 5 |") != std::string::npos);
}

TEST_CASE("detect_leakage is byte equality between a new object and the answer") {
  auto r = testing::make_record("a", 2, 1);
  CHECK_FALSE(detect_leakage(r));
  auto full = testing::make_record("b", 2, 2);
  CHECK(detect_leakage(full));
  r.edits[0].new_object = r.gold_answer + " ";
  CHECK_FALSE(detect_leakage(r));
}

TEST_CASE("verbalize puts the subject in the slot and appends the object") {
  Fact f{"Roblin Park", "{} is located in", "New South Wales", "P131"};
  CHECK(verbalize(f) == "Roblin Park is located in New South Wales");
  CHECK(as_sentence(verbalize(f)) == "Roblin Park is located in New South Wales.");
  Fact spaced{"Canada", "the president of { } is", "Bob", ""};
  CHECK(verbalize(spaced) == "the president of Canada is Bob");
  Fact plain{"Paris", "capital of", "France", ""};
  CHECK(verbalize(plain) == "Paris capital of France");
  CHECK(as_sentence("Done?") == "Done?");
}

TEST_CASE("edit verbalization by phase") {
  Edit e{"Roblin Park", "{} is located in", "Manitoba", "New South Wales", "P131"};
  auto pre = verbalize(e, Phase::pre_edit, "r#0");
  auto post = verbalize(e, Phase::post_edit, "r#0");
  CHECK(pre.text == "Roblin Park is located in Manitoba");
  CHECK(post.text == "Roblin Park is located in New South Wales");
  CHECK(pre.fact_ref == "r#0");
  CHECK(phase_name(post.phase) == "post_edit");
}

TEST_CASE("fact json round trip") {
  Edit e{"S", "{} r", "O", "N", "P1"};
  nlohmann::json j = e;
  CHECK(j.get<Edit>() == e);
  Fact f{"S", "r", "O", ""};
  nlohmann::json jf = f;
  CHECK(jf.get<Fact>() == f);
}
