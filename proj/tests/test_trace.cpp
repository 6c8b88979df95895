#include "doctest.h"
#include "helpers.hpp"
#include "mhke/llm/backend.hpp"
#include "mhke/llm/client.hpp"
#include "mhke/prompts.hpp"
#include "mhke/trace.hpp"

using namespace mhke;

namespace {

const char* kGoodTrace =
    "1.Acknowledge Updated Information: Roblin Park now sits in New South Wales.\n\n"
    "2.Determine Relevance: The question needs the state of Roblin Park, which this fact gives.\n\n"
    "3.Apply Updated Information or Ignore: Apply it.\n\n"
    "4.Reasoning: New South Wales has Sydney as its capital.\n\n"
    "[Answer]: Sydney";

EditingSet roblin_set() {
  EditingSet s;
  s.entries.push_back({{"Roblin Park", "{} is located in", "Manitoba", "New South Wales", "P131"}, Provenance::relevant, {}});
  return s;
}

TraceJob job(const std::string& id) {
  auto r = testing::make_record(id, 2, 1);
  EditingSet s;
  for (const auto& e : r.edits) s.entries.push_back({e, Provenance::relevant, {}});
  return {id, r.questions[0], r.gold_answer, s};
}

}  // namespace

TEST_CASE("worked-example style trace parses into four stages") {
  auto p = parse_trace(kGoodTrace, "Sydney");
  CHECK(p.verdict.ok);
  CHECK(p.trace.final_answer == "Sydney");
  CHECK(p.trace.acknowledge == "Roblin Park now sits in New South Wales.");
  CHECK(p.trace.stage(Stage::apply_or_ignore) == "Apply it.");
  CHECK(p.trace.raw_text == kGoodTrace);
  CHECK(render_trace(p.trace) == kGoodTrace);
}

TEST_CASE("header variants are tolerated") {
  const std::string t =
      "**1. acknowledge updated information:** A\n"
      "## 2. Determine Relevance: B\n"
      "3. APPLY UPDATED INFORMATION OR IGNORE: C\n"
      "*4. Reasoning:* D\n"
      "**[Answer]**: sydney";
  auto p = parse_trace(t, "Sydney");
  CHECK(p.verdict.ok);
  CHECK(p.trace.relevance == "B");
  CHECK(p.trace.reasoning == "D");
  CHECK(p.trace.final_answer == "sydney");
  CHECK_FALSE(parse_trace(t, "Sydney", MatchMode::exact).verdict.ok);
}

TEST_CASE("missing stage and missing answer") {
  std::string t = kGoodTrace;
  auto cut = t.find("3.Apply");
  auto end = t.find("4.Reasoning");
  t.erase(cut, end - cut);
  auto p = parse_trace(t, "Sydney");
  CHECK_FALSE(p.verdict.ok);
  CHECK(p.verdict.has(TraceFailureKind::missing_stage));
  auto q = parse_trace(std::string(kGoodTrace).substr(0, std::string(kGoodTrace).find("[Answer]")), "Sydney");
  CHECK(q.verdict.has(TraceFailureKind::missing_stage));
}

TEST_CASE("wrong answer, order and leaked scaffolding") {
  CHECK(parse_trace(kGoodTrace, "Melbourne").verdict.has(TraceFailureKind::answer_mismatch));
  const std::string swapped =
      "2.Determine Relevance: B\n1.Acknowledge Updated Information: A\n3.Apply Updated Information or Ignore: C\n"
      "4.Reasoning: D\n[Answer]: Sydney";
  CHECK(parse_trace(swapped, "Sydney").verdict.has(TraceFailureKind::order_violation));
  const std::string early = "[Answer]: Sydney\n" + std::string(kGoodTrace);
  CHECK(parse_trace(early, "Sydney").verdict.has(TraceFailureKind::order_violation));
  const std::string leaked = "[Query]: what?\n" + std::string(kGoodTrace);
  CHECK(parse_trace(leaked, "Sydney").verdict.has(TraceFailureKind::leaked_format));
  const std::string twice = std::string(kGoodTrace) + "\n4.Reasoning: again\n[Answer]: Sydney";
  CHECK(parse_trace(twice, "Sydney").verdict.has(TraceFailureKind::leaked_format));
  CHECK_THROWS_AS(parse_trace("Sydney", "Sydney"), TraceParseError);
}

TEST_CASE("render with omitted stages keeps the original numbering") {
  auto p = parse_trace(kGoodTrace, "Sydney");
  auto r = render_trace(p.trace, {Stage::relevance});
  CHECK(r.find("2.Determine") == std::string::npos);
  CHECK(r.find("3.Apply Updated Information or Ignore: Apply it.") != std::string::npos);
  CHECK(render_trace(p.trace, {kStages.begin(), kStages.end()}) == "[Answer]: Sydney");
}

TEST_CASE("teacher prompt layout") {
  auto tp = render_teacher_prompt(roblin_set(), "What is the capital city of the state where Roblin Park is located?",
                                  "Sydney", "rec-1");
  const std::string& t = tp.rendered_text;
  CHECK(t.rfind(std::string(teacher_preamble()), 0) == 0);
  const std::string block =
      "[Task]:" + std::string(kTaskInstruction) +
      "\n[Updated Information]: Roblin Park is located in New South Wales."
      "\n[Query]: What is the capital city of the state where Roblin Park is located?"
      "\n[Answer]: Sydney";
  CHECK(t.size() >= block.size());
  CHECK(t.substr(t.size() - block.size()) == block);
  CHECK(t == std::string(teacher_preamble()) + "\n\n" + block);
  CHECK(tp.record_id == "rec-1");
  CHECK(tp.editing_set_ref.size() == 16);
  CHECK(render_eval_prompt(roblin_set(), "Q?").find("[Answer]") == std::string::npos);
}

TEST_CASE("teacher prompt lists every entry and validates input") {
  auto set = roblin_set();
  set.entries.push_back({{"Ottawa", "{} is the capital of", "Canada", "Peru", ""}, Provenance::distractor, "x#0"});
  set.entries.push_back({{"Lake Louise", "{} is located in", "Alberta", "Chile", ""}, Provenance::distractor, "y#0"});
  auto lines = updated_information_lines(set);
  REQUIRE(lines.size() == 3);
  CHECK(lines[1] == "Ottawa is the capital of Peru.");
  auto t = render_teacher_prompt(set, "Q?", "A").rendered_text;
  for (const auto& l : lines) CHECK(t.find(l) != std::string::npos);
  CHECK_THROWS_AS(render_teacher_prompt(set, "", "A"), std::invalid_argument);
  CHECK_THROWS_AS(render_teacher_prompt(set, "Q?", ""), std::invalid_argument);
  CHECK_THROWS_AS(render_teacher_prompt(EditingSet{}, "Q?", "A"), std::invalid_argument);
}

TEST_CASE("generation retries a malformed reply then accepts") {
  llm::MockScript s;
  s.sleep = false;
  auto j = job("g1");
  llm::MockRule r;
  r.pattern = "[Query]: " + j.question;
  r.responses = {"no headers here",
                 "1.Acknowledge Updated Information: a\n2.Determine Relevance: b\n"
                 "3.Apply Updated Information or Ignore: c\n4.Reasoning: d\n[Answer]: {{answer}}"};
  s.rules = {r};
  llm::ChatClient c(std::make_shared<llm::MockBackend>(s));
  TraceGenConfig cfg;
  cfg.model = "teacher";
  auto res = generate_traces({j}, c, cfg);
  REQUIRE(res.accepted.size() == 1);
  CHECK(res.accepted[0].attempts == 2);
  CHECK(res.accepted[0].trace.final_answer == j.gold_answer);
  auto back = accepted_trace_from_json(to_json(res.accepted[0]));
  CHECK(back.trace == res.accepted[0].trace);
  CHECK(back.job.editing_set == j.editing_set);
}

TEST_CASE("always-wrong teacher ends in rejection with reasons") {
  llm::MockScript s;
  s.sleep = false;
  s.default_response =
      "1.Acknowledge Updated Information: a\n2.Determine Relevance: b\n"
      "3.Apply Updated Information or Ignore: c\n4.Reasoning: d\n[Answer]: Nowhere";
  llm::ChatClient c(std::make_shared<llm::MockBackend>(s));
  TraceGenConfig cfg;
  cfg.model = "teacher";
  cfg.retries = 1;
  auto res = generate_traces({job("w1"), job("w2")}, c, cfg);
  CHECK(res.accepted.empty());
  REQUIRE(res.rejected.size() == 2);
  CHECK(res.rejected[0].job.record_id == "w1");
  CHECK(res.rejected[0].attempts == 2);
  CHECK(res.rejected[0].reasons == std::vector<std::string>{"answer_mismatch"});
  CHECK(c.stats().network_attempts == 4);
}
