#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mhke::text {

/// Strips leading/trailing ASCII and Unicode whitespace.
std::string trim(std::string_view s);

/// Unicode NFC. Invalid UTF-8 is passed through unchanged.
std::string nfc(std::string_view s);

/// NFC followed by trim; the comparison key for entity surface forms.
std::string entity_key(std::string_view s);

/// Full Unicode lowercase (root locale).
std::string lower(std::string_view s);

/// Replaces every run of whitespace with one ASCII space and trims.
std::string collapse_whitespace(std::string_view s);

/// Removes Unicode punctuation from both ends (repeatedly, interleaved with trimming).
std::string strip_surrounding_punctuation(std::string_view s);

/// Splits into code points, each as its UTF-8 byte sequence.
std::vector<std::string> code_points(std::string_view s);

/// Lowercased alphanumeric word tokens.
std::vector<std::string> words(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split_lines(std::string_view s);

}  // namespace mhke::text
