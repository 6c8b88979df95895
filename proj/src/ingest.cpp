#include "mhke/ingest.hpp"

#include <fmt/format.h>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace mhke {
namespace {

using nlohmann::json;

/// Missing/ill-typed field inside one record.
struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
    throw FieldError(fmt::format("missing required field '{}'", key));
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw FieldError(fmt::format("field '{}' must be a string", key));
}

std::vector<std::string> string_list(const json& v, const char* key) {
  if (!v.is_array()) throw FieldError(fmt::format("field '{}' must be an array", key));
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw FieldError(fmt::format("field '{}' must hold strings", key));
    out.push_back(s.get<std::string>());
  }
  return out;
}

HopChain labeled_chain(const json& labeled, const json* ids, const char* key) {
  if (!labeled.is_array()) throw FieldError(fmt::format("field '{}' must be an array", key));
  HopChain chain;
  for (size_t i = 0; i < labeled.size(); ++i) {
    const auto& t = labeled[i];
    if (!t.is_array() || t.size() != 3) throw FieldError(fmt::format("'{}'[{}] must be a triple", key, i));
    Fact f{t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>(), {}};
    if (ids && ids->is_array() && ids->size() == labeled.size() && (*ids)[i].is_array() && (*ids)[i].size() == 3 &&
        (*ids)[i][1].is_string())
      f.relation_id = (*ids)[i][1].get<std::string>();
    chain.hops.push_back(std::move(f));
  }
  return chain;
}

MQRecord from_mquake(const json& j) {
  static const std::set<std::string> kMapped = {"case_id", "requested_rewrite", "questions", "new_answer",
                                                "new_answer_alias", "orig"};
  MQRecord r;
  r.record_id = require_string(j, "case_id");
  r.questions = string_list(require(j, "questions"), "questions");
  for (const auto& rw : require(j, "requested_rewrite")) {
    Edit e;
    e.subject = require_string(rw, "subject");
    e.relation = require_string(rw, "prompt");
    e.relation_id = rw.value("relation_id", std::string{});
    e.old_object = require_string(require(rw, "target_true"), "str");
    e.new_object = require_string(require(rw, "target_new"), "str");
    r.edits.push_back(std::move(e));
  }
  const auto& orig = require(j, "orig");
  const json* new_ids = orig.contains("new_triples") ? &orig.at("new_triples") : nullptr;
  r.post_edit_chain = labeled_chain(require(orig, "new_triples_labeled"), new_ids, "new_triples_labeled");
  if (orig.contains("triples_labeled")) {
    const json* ids = orig.contains("triples") ? &orig.at("triples") : nullptr;
    r.pre_edit_chain = labeled_chain(orig.at("triples_labeled"), ids, "triples_labeled");
  }
  r.gold_answer = require_string(j, "new_answer");
  if (j.contains("new_answer_alias") && !j.at("new_answer_alias").is_null())
    r.answer_aliases = string_list(j.at("new_answer_alias"), "new_answer_alias");
  r.hop_count = static_cast<int>(r.post_edit_chain.size());

  for (const auto& [key, value] : j.items())
    if (!kMapped.count(key)) r.extras[key] = value;
  json orig_rest = json::object();
  for (const auto& [key, value] : orig.items())
    if (key != "new_triples_labeled" && key != "triples_labeled" && key != "new_triples" && key != "triples")
      orig_rest[key] = value;
  if (!orig_rest.empty()) r.extras["orig"] = orig_rest;
  return r;
}

HopChain canonical_chain(const json& v, const char* key) {
  if (!v.is_array()) throw FieldError(fmt::format("field '{}' must be an array", key));
  HopChain chain;
  for (const auto& f : v) {
    Fact fact;
    fact.subject = require_string(f, "subject");
    fact.relation = require_string(f, "relation");
    fact.object = require_string(f, "object");
    fact.relation_id = f.value("relation_id", std::string{});
    chain.hops.push_back(std::move(fact));
  }
  return chain;
}

MQRecord from_canonical(const json& j) {
  static const std::set<std::string> kKnown = {"record_id", "questions", "edits", "post_edit_chain",
                                               "pre_edit_chain", "gold_answer", "answer_aliases",
                                               "hop_count", "strict", "issues", "extras"};
  MQRecord r;
  r.record_id = require_string(j, "record_id");
  r.questions = string_list(require(j, "questions"), "questions");
  const auto& edits = require(j, "edits");
  if (!edits.is_array()) throw FieldError("field 'edits' must be an array");
  for (const auto& e : edits) {
    Edit edit;
    edit.subject = require_string(e, "subject");
    edit.relation = require_string(e, "relation");
    edit.old_object = require_string(e, "old_object");
    edit.new_object = require_string(e, "new_object");
    edit.relation_id = e.value("relation_id", std::string{});
    r.edits.push_back(std::move(edit));
  }
  r.post_edit_chain = canonical_chain(require(j, "post_edit_chain"), "post_edit_chain");
  if (j.contains("pre_edit_chain") && !j.at("pre_edit_chain").is_null())
    r.pre_edit_chain = canonical_chain(j.at("pre_edit_chain"), "pre_edit_chain");
  r.gold_answer = require_string(j, "gold_answer");
  if (j.contains("answer_aliases")) r.answer_aliases = string_list(j.at("answer_aliases"), "answer_aliases");
  r.hop_count = j.contains("hop_count") ? j.at("hop_count").get<int>() : static_cast<int>(r.post_edit_chain.size());
  if (j.contains("extras") && j.at("extras").is_object()) r.extras = j.at("extras");
  for (const auto& [key, value] : j.items())
    if (!kKnown.count(key)) r.extras[key] = value;
  return r;
}

bool looks_like_mquake(const json& j) { return j.is_object() && j.contains("requested_rewrite"); }

struct RawRecord {
  json value;
  size_t offset;
};

std::vector<RawRecord> split_source(std::string_view source) {
  size_t first = source.find_first_not_of(" \t\r\n");
  std::vector<RawRecord> out;
  if (first == std::string_view::npos) return out;
  if (source.size() >= 3 && static_cast<unsigned char>(source[0]) == 0xEF) first = source.find_first_not_of(" \t\r\n", 3);

  auto parse = [](std::string_view text, size_t base) {
    try {
      return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      size_t at = base + (e.byte > 0 ? e.byte - 1 : 0);
      throw JsonSyntaxError(fmt::format("malformed JSON at byte {}: {}", at, e.what()), at);
    }
  };

  if (source[first] == '[') {
    json arr = parse(source, 0);
    for (auto& v : arr) out.push_back({std::move(v), 0});
    return out;
  }
  size_t pos = 0;
  while (pos < source.size()) {
    size_t nl = source.find('\n', pos);
    size_t end = nl == std::string_view::npos ? source.size() : nl;
    std::string_view line = source.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) out.push_back({parse(line, pos), pos});
    pos = end + 1;
  }
  return out;
}

}  // namespace

IngestResult ingest_records(std::string_view source, SchemaMode mode, SourceFormat format) {
  IngestResult result;
  std::set<std::string> seen_ids;
  auto raws = split_source(source);
  for (size_t i = 0; i < raws.size(); ++i) {
    const auto& raw = raws[i].value;
    std::string rid;
    if (raw.is_object()) {
      for (const char* k : {"record_id", "case_id"})
        if (raw.contains(k)) rid = raw.at(k).is_string() ? raw.at(k).get<std::string>() : raw.at(k).dump();
    }
    auto fail = [&](const std::string& msg) {
      if (mode == SchemaMode::strict)
        throw RecordRejected(fmt::format("record {} ({}): {}", i, rid.empty() ? "?" : rid, msg), rid, i);
      result.warnings.push_back({i, rid, msg + "; record skipped"});
    };

    MQRecord rec;
    try {
      bool mq = format == SourceFormat::mquake || (format == SourceFormat::auto_detect && looks_like_mquake(raw));
      rec = mq ? from_mquake(raw) : from_canonical(raw);
    } catch (const FieldError& e) {
      fail(e.what());
      continue;
    } catch (const json::exception& e) {
      fail(std::string("bad field type: ") + e.what());
      continue;
    }
    if (rec.edits.empty() || rec.post_edit_chain.empty() || rec.questions.empty()) {
      fail(rec.edits.empty() ? "no edits" : rec.questions.empty() ? "no questions" : "empty post_edit_chain");
      continue;
    }
    if (!seen_ids.insert(rec.record_id).second) {
      fail("duplicate record_id");
      continue;
    }

    auto check = check_record(rec);
    rec.strict = true;
    rec.issues.clear();
    if (!check.errors.empty()) {
      if (mode == SchemaMode::strict) {
        seen_ids.erase(rec.record_id);
        throw RecordRejected(fmt::format("record {} ({}): {}", i, rec.record_id, check.errors.front()),
                             rec.record_id, i);
      }
      for (const auto& e : check.errors) {
        result.warnings.push_back({i, rec.record_id, e});
        rec.issues.push_back(e);
      }
      rec.strict = false;
    }
    for (const auto& m : check.missing_edits) {
      result.warnings.push_back({i, rec.record_id, m});
      rec.issues.push_back(m);
      rec.strict = false;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

IngestResult ingest_records(std::istream& in, SchemaMode mode, SourceFormat format) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_records(buf.str(), mode, format);
}

IngestResult ingest_file(const std::filesystem::path& path, SchemaMode mode, SourceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ingest_records(in, mode, format);
}

nlohmann::json record_to_json(const MQRecord& r) {
  json j = {{"record_id", r.record_id},
            {"questions", r.questions},
            {"edits", r.edits},
            {"post_edit_chain", r.post_edit_chain.hops},
            {"gold_answer", r.gold_answer},
            {"answer_aliases", r.answer_aliases},
            {"hop_count", r.hop_count},
            {"strict", r.strict}};
  if (r.pre_edit_chain) j["pre_edit_chain"] = r.pre_edit_chain->hops;
  if (!r.issues.empty()) j["issues"] = r.issues;
  if (!r.extras.empty()) j["extras"] = r.extras;
  return j;
}

std::string serialize_records(const std::vector<MQRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

SourceFormat parse_source_format(std::string_view name) {
  if (name == "auto") return SourceFormat::auto_detect;
  if (name == "mquake") return SourceFormat::mquake;
  if (name == "canonical") return SourceFormat::canonical;
  throw std::invalid_argument("unknown schema '" + std::string(name) + "'");
}

SchemaMode parse_schema_mode(std::string_view name) {
  if (name == "strict") return SchemaMode::strict;
  if (name == "lenient") return SchemaMode::lenient;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

}  // namespace mhke
