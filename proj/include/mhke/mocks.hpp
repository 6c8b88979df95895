#pragma once

#include <string>
#include <vector>

#include "mhke/llm/backend.hpp"
#include "mhke/model.hpp"

namespace mhke {

/// Answers every paraphrase of every record with "[Answer]: <gold answer>".
llm::MockScript oracle_mock_script(const std::vector<MQRecord>& records);

/// Answers with the pre-edit chain's final object; records without a
/// pre-edit chain fall through to the default reply.
llm::MockScript pre_edit_mock_script(const std::vector<MQRecord>& records);

/// Teacher stand-in: a well-formed four-stage trace ending in the answer
/// given in the prompt.
llm::MockScript teacher_mock_script();

/// Template used by teacher_mock_script.
extern const char* const kTeacherMockTemplate;

}  // namespace mhke
