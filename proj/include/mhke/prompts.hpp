#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mhke/editing_set.hpp"

namespace mhke {

inline constexpr std::string_view kTaskInstruction =
    "Please acknowledge the updated information provided below and respond to the subsequent query.";

/// The teacher prompt's fixed preamble: request line plus the worked example,
/// ending with the example's answer line.
std::string_view teacher_preamble();

/// Post-edit sentence of every entry, in editing-set order.
std::vector<std::string> updated_information_lines(const EditingSet& set);

struct TeacherPrompt {
  std::string rendered_text;
  std::string record_id;
  /// Short content hash of the editing set.
  std::string editing_set_ref;
};

/// Throws std::invalid_argument on an empty editing set, question or answer.
TeacherPrompt render_teacher_prompt(const EditingSet& set, std::string_view question, std::string_view gold_answer,
                                    std::string record_id = {});

/// Task instruction, updated information and query; the user turn at
/// evaluation time and in SFT data.
std::string render_eval_prompt(const EditingSet& set, std::string_view question);

std::string editing_set_ref(const EditingSet& set);

}  // namespace mhke
