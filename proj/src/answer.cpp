#include "mhke/answer.hpp"

#include <stdexcept>

#include "mhke/text.hpp"

namespace mhke {
namespace {

std::string strip_article(const std::string& s) {
  for (std::string_view article : {"the ", "an ", "a "})
    if (s.size() > article.size() && s.compare(0, article.size(), article) == 0) return s.substr(article.size());
  return s;
}

std::string clean_answer_line(std::string_view line) {
  size_t b = 0, e = line.size();
  while (b < e && (line[b] == '*' || line[b] == ' ' || line[b] == '\t')) ++b;
  while (e > b && (line[e - 1] == '*' || line[e - 1] == ' ' || line[e - 1] == '\t')) --e;
  return text::trim(line.substr(b, e - b));
}

}  // namespace

MatchMode parse_match_mode(std::string_view name) {
  if (name == "exact") return MatchMode::exact;
  if (name == "normalized") return MatchMode::normalized;
  throw std::invalid_argument("unknown match mode: " + std::string(name));
}

std::string_view match_mode_name(MatchMode m) { return m == MatchMode::exact ? "exact" : "normalized"; }

std::string normalize_answer(std::string_view s) {
  std::string cur = text::nfc(s);
  for (;;) {
    std::string next = text::lower(cur);
    next = text::collapse_whitespace(next);
    next = text::strip_surrounding_punctuation(next);
    next = strip_article(next);
    if (next == cur) return next;
    cur = std::move(next);
  }
}

bool answers_match(std::string_view candidate, std::string_view gold, MatchMode mode) {
  if (mode == MatchMode::exact) return candidate == gold;
  return normalize_answer(candidate) == normalize_answer(gold);
}

bool exact_match(std::string_view candidate, std::string_view gold, const std::vector<std::string>& aliases,
                 MatchMode mode) {
  if (mode == MatchMode::exact) {
    if (candidate == gold) return true;
    for (const auto& a : aliases)
      if (candidate == a) return true;
    return false;
  }
  const std::string c = normalize_answer(candidate);
  if (c == normalize_answer(gold)) return true;
  for (const auto& a : aliases)
    if (c == normalize_answer(a)) return true;
  return false;
}

std::optional<size_t> last_answer_marker(std::string_view t, size_t* marker_start) {
  constexpr std::string_view kTag = "[answer]";
  std::optional<size_t> found;
  for (size_t pos = 0; pos + kTag.size() <= t.size(); ++pos) {
    if (!text::starts_with_ci(t.substr(pos), kTag)) continue;
    size_t i = pos + kTag.size();
    while (i < t.size() && (t[i] == ' ' || t[i] == '*')) ++i;
    if (i < t.size() && t[i] == ':') {
      found = i + 1;
      if (marker_start) *marker_start = pos;
    }
  }
  return found;
}

std::string extract_answer(std::string_view model_text) {
  if (auto after = last_answer_marker(model_text)) {
    for (const auto& line : text::split_lines(model_text.substr(*after)))
      if (auto c = clean_answer_line(line); !c.empty()) return c;
    return {};
  }
  auto lines = text::split_lines(model_text);
  for (size_t i = lines.size(); i-- > 0;)
    if (auto t = text::trim(lines[i]); !t.empty()) return t;
  return {};
}

}  // namespace mhke
