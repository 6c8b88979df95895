#include "mhke/model.hpp"

#include <fmt/format.h>

#include <set>

#include "mhke/text.hpp"

namespace mhke {

ChainValidation validate_chain(const HopChain& chain) {
  for (size_t i = 0; i + 1 < chain.hops.size(); ++i) {
    if (text::entity_key(chain.hops[i + 1].subject) != text::entity_key(chain.hops[i].object))
      return {false, i};
  }
  return {};
}

std::vector<std::string> fact_problems(const Fact& f) {
  std::vector<std::string> out;
  if (text::trim(f.subject).empty()) out.emplace_back("empty subject");
  if (text::trim(f.relation).empty()) out.emplace_back("empty relation");
  if (text::trim(f.object).empty()) out.emplace_back("empty object");
  return out;
}

namespace {

bool same_relation(const std::string& id_a, const std::string& text_a, const std::string& id_b,
                   const std::string& text_b) {
  if (!id_a.empty() && !id_b.empty()) return id_a == id_b;
  return text::entity_key(text_a) == text::entity_key(text_b);
}

}  // namespace

bool edit_in_chain(const Edit& edit, const HopChain& chain) {
  const auto subj = text::entity_key(edit.subject);
  const auto obj = text::entity_key(edit.new_object);
  for (const auto& hop : chain.hops) {
    if (text::entity_key(hop.subject) == subj && text::entity_key(hop.object) == obj &&
        same_relation(edit.relation_id, edit.relation, hop.relation_id, hop.relation))
      return true;
  }
  return false;
}

RecordCheck check_record(const MQRecord& r) {
  RecordCheck out;
  auto err = [&](std::string msg) { out.errors.push_back(std::move(msg)); };

  if (text::trim(r.record_id).empty()) err("empty record_id");
  if (r.questions.empty()) err("no questions");
  for (const auto& q : r.questions)
    if (text::trim(q).empty()) err("empty question");
  if (r.edits.empty()) err("no edits");
  for (size_t i = 0; i < r.edits.size(); ++i) {
    const auto& e = r.edits[i];
    for (const auto& p : fact_problems(e.before())) err(fmt::format("edit {}: {}", i, p));
    if (text::trim(e.new_object).empty()) err(fmt::format("edit {}: empty new_object", i));
    if (e.old_object == e.new_object) err(fmt::format("edit {}: old_object equals new_object", i));
  }
  if (r.post_edit_chain.empty()) {
    err("empty post_edit_chain");
    return out;
  }
  for (size_t i = 0; i < r.post_edit_chain.size(); ++i)
    for (const auto& p : fact_problems(r.post_edit_chain.hops[i])) err(fmt::format("hop {}: {}", i, p));
  if (auto v = validate_chain(r.post_edit_chain); !v.ok)
    err(fmt::format("post_edit_chain broken between hop {} and {}", *v.violation, *v.violation + 1));
  if (r.pre_edit_chain && !r.pre_edit_chain->empty()) {
    if (auto v = validate_chain(*r.pre_edit_chain); !v.ok)
      err(fmt::format("pre_edit_chain broken between hop {} and {}", *v.violation, *v.violation + 1));
  }
  if (r.hop_count != static_cast<int>(r.post_edit_chain.size()))
    err(fmt::format("hop_count {} != chain length {}", r.hop_count, r.post_edit_chain.size()));
  if (r.gold_answer != r.post_edit_chain.answer())
    err(fmt::format("gold_answer '{}' != chain answer '{}'", r.gold_answer, r.post_edit_chain.answer()));

  for (size_t i = 0; i < r.edits.size(); ++i) {
    if (!edit_in_chain(r.edits[i], r.post_edit_chain))
      out.missing_edits.push_back(fmt::format("edit {} ({}) not in post_edit_chain", i, r.edits[i].subject));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<MQRecord>& records) {
  CorpusStats s;
  for (const auto& r : records) {
    ++s.cells[{r.hop_count, r.edit_count()}];
    ++s.by_hop[r.hop_count];
    ++s.by_edits[r.edit_count()];
    ++s.total;
  }
  return s;
}

bool detect_leakage(const MQRecord& record) {
  for (const auto& e : record.edits)
    if (e.new_object == record.gold_answer) return true;
  return false;
}

void to_json(nlohmann::json& j, const Fact& f) {
  j = {{"subject", f.subject}, {"relation", f.relation}, {"object", f.object}};
  if (!f.relation_id.empty()) j["relation_id"] = f.relation_id;
}

void from_json(const nlohmann::json& j, Fact& f) {
  f.subject = j.at("subject").get<std::string>();
  f.relation = j.at("relation").get<std::string>();
  f.object = j.at("object").get<std::string>();
  f.relation_id = j.value("relation_id", std::string{});
}

void to_json(nlohmann::json& j, const Edit& e) {
  j = {{"subject", e.subject},
       {"relation", e.relation},
       {"old_object", e.old_object},
       {"new_object", e.new_object}};
  if (!e.relation_id.empty()) j["relation_id"] = e.relation_id;
}

void from_json(const nlohmann::json& j, Edit& e) {
  e.subject = j.at("subject").get<std::string>();
  e.relation = j.at("relation").get<std::string>();
  e.old_object = j.at("old_object").get<std::string>();
  e.new_object = j.at("new_object").get<std::string>();
  e.relation_id = j.value("relation_id", std::string{});
}

nlohmann::json stats_to_json(const CorpusStats& s) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, n] : s.cells) cells.push_back({{"hops", key.first}, {"edits", key.second}, {"count", n}});
  nlohmann::json by_hop = nlohmann::json::object();
  for (const auto& [h, n] : s.by_hop) by_hop[std::to_string(h)] = n;
  nlohmann::json by_edits = nlohmann::json::object();
  for (const auto& [e, n] : s.by_edits) by_edits[std::to_string(e)] = n;
  return {{"cells", cells}, {"by_hop", by_hop}, {"by_edits", by_edits}, {"total", s.total}};
}

std::string render_stats_table(const CorpusStats& s) {
  std::set<int> hops, edits;
  for (const auto& [key, n] : s.cells) {
    hops.insert(key.first);
    edits.insert(key.second);
  }
  std::string out = "| #Edits |";
  for (int h : hops) out += fmt::format(" {}-hop |", h);
  out += " Total |\n|---|";
  for (size_t i = 0; i < hops.size(); ++i) out += "---|";
  out += "---|\n";
  for (int e : edits) {
    out += fmt::format("| {} |", e);
    for (int h : hops) {
      int n = s.cell(h, e);
      out += n ? fmt::format(" {} |", n) : std::string(" - |");
    }
    out += fmt::format(" {} |\n", s.by_edits.at(e));
  }
  out += "| All |";
  for (int h : hops) out += fmt::format(" {} |", s.hop_total(h));
  out += fmt::format(" {} |\n", s.total);
  return out;
}

}  // namespace mhke
