#include "mhke/mocks.hpp"

#include "mhke/text.hpp"

namespace mhke {

const char* const kTeacherMockTemplate =
    "1.Acknowledge Updated Information: The updated information states: {{updated_information}}\n\n"
    "2.Determine Relevance: The query asks: {{query}} The updated information bears on this question.\n\n"
    "3.Apply Updated Information or Ignore: Apply the updated facts that lie on the path of the query.\n\n"
    "4.Reasoning: Following the updated facts hop by hop, the answer to the query is {{answer}}.\n\n"
    "[Answer]: {{answer}}";

llm::MockScript oracle_mock_script(const std::vector<MQRecord>& records) {
  llm::MockScript s;
  for (const auto& r : records)
    for (const auto& q : r.questions) s.by_query[text::trim(q)] = "[Answer]: " + r.gold_answer;
  s.default_response = "[Answer]: unknown";
  return s;
}

llm::MockScript pre_edit_mock_script(const std::vector<MQRecord>& records) {
  llm::MockScript s;
  for (const auto& r : records) {
    if (!r.pre_edit_chain || r.pre_edit_chain->empty()) continue;
    for (const auto& q : r.questions) s.by_query[text::trim(q)] = "[Answer]: " + r.pre_edit_chain->answer();
  }
  s.default_response = "[Answer]: unknown";
  return s;
}

llm::MockScript teacher_mock_script() {
  llm::MockScript s;
  s.default_response = kTeacherMockTemplate;
  return s;
}

}  // namespace mhke
