#include "mhke/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cctype>

namespace mhke::text {
namespace {

// Decodes the code point starting at `i`, advancing `i`. Returns U_SENTINEL on bad input.
UChar32 next_cp(std::string_view s, int32_t& i) {
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, static_cast<int32_t>(s.size()), c);
  return c;
}

UChar32 prev_cp(std::string_view s, int32_t& i) {
  UChar32 c;
  U8_PREV(reinterpret_cast<const uint8_t*>(s.data()), 0, i, c);
  return c;
}

bool is_space(UChar32 c) { return c >= 0 && (u_isUWhiteSpace(c) || c == 0xFEFF); }

template <typename Pred>
std::string strip_if(std::string_view s, Pred pred) {
  int32_t begin = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (begin < n) {
    int32_t j = begin;
    UChar32 c = next_cp(s, j);
    if (!pred(c)) break;
    begin = j;
  }
  int32_t end = n;
  while (end > begin) {
    int32_t j = end;
    UChar32 c = prev_cp(s, j);
    if (!pred(c)) break;
    end = j;
  }
  return std::string(s.substr(begin, end - begin));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

std::string trim(std::string_view s) { return strip_if(s, is_space); }

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(s);
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (norm->isNormalized(u, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm->normalize(u, status);
  if (U_FAILURE(status)) return std::string(s);
  return to_utf8(out);
}

std::string entity_key(std::string_view s) { return trim(nfc(s)); }

std::string lower(std::string_view s) {
  bool ascii = std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  return to_utf8(u);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    int32_t start = i;
    UChar32 c = next_cp(s, i);
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(s.substr(start, i - start));
  }
  return out;
}

std::string strip_surrounding_punctuation(std::string_view s) {
  return strip_if(s, [](UChar32 c) { return c >= 0 && (u_ispunct(c) || is_space(c)); });
}

std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    int32_t start = i;
    next_cp(s, i);
    out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string low = lower(s);
  std::string cur;
  int32_t i = 0;
  const auto n = static_cast<int32_t>(low.size());
  while (i < n) {
    int32_t start = i;
    UChar32 c = next_cp(low, i);
    if (c >= 0 && u_isalnum(c)) {
      cur.append(low, start, i - start);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      break;
    }
    std::string_view line = s.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    pos = nl + 1;
  }
  return out;
}

}  // namespace mhke::text
