#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mhke {

enum class MatchMode { exact, normalized };

MatchMode parse_match_mode(std::string_view name);
std::string_view match_mode_name(MatchMode m);

/// NFC, lowercase, collapse whitespace, strip surrounding punctuation and a
/// leading "a"/"an"/"the"; repeated until nothing changes.
std::string normalize_answer(std::string_view s);

/// Exact mode compares bytes; normalized mode compares normalize_answer.
bool answers_match(std::string_view candidate, std::string_view gold, MatchMode mode = MatchMode::normalized);

bool exact_match(std::string_view candidate, std::string_view gold, const std::vector<std::string>& aliases,
                 MatchMode mode = MatchMode::normalized);

/// Offset just past the last "[Answer]:" marker (case-insensitive; spaces or
/// markdown '*' allowed between "]" and ":"), if any.
std::optional<size_t> last_answer_marker(std::string_view text, size_t* marker_start = nullptr);

/// First non-empty line after the last "[Answer]:" marker, or the last
/// non-empty line when there is no marker. Empty text gives "".
std::string extract_answer(std::string_view model_text);

}  // namespace mhke
