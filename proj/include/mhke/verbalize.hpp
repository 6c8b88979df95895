#pragma once

#include <string>
#include <string_view>

#include "mhke/model.hpp"

namespace mhke {

enum class Phase { pre_edit, post_edit };

std::string_view phase_name(Phase p);

struct FactVerbalization {
  std::string fact_ref;
  std::string text;
  Phase phase = Phase::pre_edit;
};

/// Sentence form of a fact. A relation template's "{}" (or "{ }") slot takes
/// the subject and the object follows the template; a template without a slot
/// yields "<subject> <relation> <object>". Whitespace is collapsed.
///
///   ("Roblin Park", "{} is located in", "New South Wales")
///     -> "Roblin Park is located in New South Wales"
std::string verbalize(const Fact& fact);

/// Pre-edit phase uses the old object, post-edit the new one.
FactVerbalization verbalize(const Edit& edit, Phase phase, std::string fact_ref);

/// The verbalization with a terminal period, as shown in prompts.
std::string as_sentence(std::string_view verbalization);

}  // namespace mhke
