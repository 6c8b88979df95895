#include "mhke/verbalize.hpp"

#include "mhke/text.hpp"

namespace mhke {

std::string_view phase_name(Phase p) { return p == Phase::pre_edit ? "pre_edit" : "post_edit"; }

std::string verbalize(const Fact& fact) {
  const std::string subject = text::trim(fact.subject);
  const std::string object = text::trim(fact.object);
  std::string tmpl = fact.relation;
  for (std::string_view slot : {"{ }", "{}"}) {
    if (auto pos = tmpl.find(slot); pos != std::string::npos) {
      tmpl.replace(pos, slot.size(), subject);
      return text::collapse_whitespace(tmpl + " " + object);
    }
  }
  return text::collapse_whitespace(subject + " " + tmpl + " " + object);
}

FactVerbalization verbalize(const Edit& edit, Phase phase, std::string fact_ref) {
  const Fact f = phase == Phase::pre_edit ? edit.before() : edit.after();
  return {std::move(fact_ref), verbalize(f), phase};
}

std::string as_sentence(std::string_view verbalization) {
  std::string s = text::trim(verbalization);
  if (s.empty()) return s;
  const char last = s.back();
  if (last == '.' || last == '!' || last == '?') return s;
  return s + ".";
}

}  // namespace mhke
