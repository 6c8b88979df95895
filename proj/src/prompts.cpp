#include "mhke/prompts.hpp"

#include <stdexcept>

#include "mhke/hashing.hpp"
#include "mhke/text.hpp"
#include "mhke/verbalize.hpp"

namespace mhke {
namespace {

constexpr std::string_view kPreamble =
    "Please provide a reasoning process based on my following tasks and corresponding answers. "
    "Your answer must strictly follow the steps of my example.\n"
    "\n"
    "[Task]:Please acknowledge the updated information provided below and respond to the subsequent query.\n"
    "\n"
    "[Updated Information]:Roblin Park is located in New South Wales.\n"
    "\n"
    "[Query]:What is the capital city of the state where Roblin Park is located?\n"
    "\n"
    "[Answer]:Sydney\n"
    "\n"
    "[Reasoning Process]\n"
    "\n"
    "1.Acknowledge Updated Information: The updated information states that Roblin Park is located in New South "
    "Wales.\n"
    "\n"
    "2.Determine Relevance: The query asks for the capital of the state where Roblin Park is located. Since the "
    "updated information explicitly provides the state (New South Wales), it is directly relevant to answering the "
    "question.\n"
    "\n"
    "3.Apply Updated Information or Ignore: Apply Roblin park's new location.\n"
    "\n"
    "4.Reasoning: Roblin Park lies within the state of New South Wales. The capital of New South Wales is Sydney. "
    "Therefore, the capital of the state where Roblin Park is located is Sydney\n"
    "\n"
    "[Answer]: Sydney";

std::string task_block(const EditingSet& set, std::string_view question) {
  std::string out = "[Task]:";
  out += kTaskInstruction;
  out += "\n[Updated Information]: ";
  const auto lines = updated_information_lines(set);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  out += "\n[Query]: ";
  out += text::trim(question);
  return out;
}

}  // namespace

std::string_view teacher_preamble() { return kPreamble; }

std::vector<std::string> updated_information_lines(const EditingSet& set) {
  std::vector<std::string> lines;
  lines.reserve(set.entries.size());
  for (const auto& e : set.entries) lines.push_back(as_sentence(verbalize(e.edit.after())));
  return lines;
}

std::string editing_set_ref(const EditingSet& set) { return sha256_hex(to_json(set).dump()).substr(0, 16); }

TeacherPrompt render_teacher_prompt(const EditingSet& set, std::string_view question, std::string_view gold_answer,
                                    std::string record_id) {
  if (set.entries.empty()) throw std::invalid_argument("teacher prompt needs a non-empty editing set");
  if (text::trim(question).empty()) throw std::invalid_argument("teacher prompt needs a question");
  if (text::trim(gold_answer).empty()) throw std::invalid_argument("teacher prompt needs an answer");
  TeacherPrompt p;
  p.rendered_text.reserve(kPreamble.size() + 512);
  p.rendered_text += kPreamble;
  p.rendered_text += "\n\n";
  p.rendered_text += task_block(set, question);
  p.rendered_text += "\n[Answer]: ";
  p.rendered_text += text::trim(gold_answer);
  p.record_id = std::move(record_id);
  p.editing_set_ref = editing_set_ref(set);
  return p;
}

std::string render_eval_prompt(const EditingSet& set, std::string_view question) {
  if (set.entries.empty()) throw std::invalid_argument("evaluation prompt needs a non-empty editing set");
  if (text::trim(question).empty()) throw std::invalid_argument("evaluation prompt needs a question");
  return task_block(set, question);
}

}  // namespace mhke
