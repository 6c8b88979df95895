#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mhke {

/// One (subject, relation, object) triple. `relation` may be a cloze template
/// such as "the president of {} is"; `relation_id` is an optional stable id
/// (e.g. a Wikidata property) used when comparing facts from different sources.
struct Fact {
  std::string subject;
  std::string relation;
  std::string object;
  std::string relation_id;

  bool operator==(const Fact&) const = default;
};

/// A rewrite of one fact's object: (s, r, o -> o*).
struct Edit {
  std::string subject;
  std::string relation;
  std::string old_object;
  std::string new_object;
  std::string relation_id;

  bool operator==(const Edit&) const = default;

  Fact before() const { return {subject, relation, old_object, relation_id}; }
  Fact after() const { return {subject, relation, new_object, relation_id}; }
};

/// Ordered facts where each hop's subject is the previous hop's object.
struct HopChain {
  std::vector<Fact> hops;

  bool operator==(const HopChain&) const = default;

  size_t size() const { return hops.size(); }
  bool empty() const { return hops.empty(); }
  /// Final object; the chain's answer. Requires a non-empty chain.
  const std::string& answer() const { return hops.back().object; }
};

struct MQRecord {
  std::string record_id;
  std::vector<std::string> questions;
  std::vector<Edit> edits;
  HopChain post_edit_chain;
  std::optional<HopChain> pre_edit_chain;
  std::string gold_answer;
  std::vector<std::string> answer_aliases;
  int hop_count = 0;
  /// False when some edit cannot be located in the post-edit chain.
  bool strict = true;
  std::vector<std::string> issues;
  /// Unknown source fields, preserved verbatim.
  nlohmann::json extras = nlohmann::json::object();

  bool operator==(const MQRecord&) const = default;

  int edit_count() const { return static_cast<int>(edits.size()); }
};

struct ChainValidation {
  bool ok = true;
  /// Smallest i such that hops[i + 1].subject != hops[i].object.
  std::optional<size_t> violation;
};

ChainValidation validate_chain(const HopChain& chain);

/// Problems that make a fact unusable (empty fields after trimming).
std::vector<std::string> fact_problems(const Fact& f);

/// True if the chain contains the edit's post-edit fact. Relations compare by
/// relation_id when both sides carry one, else by text.
bool edit_in_chain(const Edit& edit, const HopChain& chain);

struct RecordCheck {
  /// Invariant violations; strict ingestion rejects the record on any of these.
  std::vector<std::string> errors;
  /// Edits absent from the post-edit chain; only flags the record non-strict.
  std::vector<std::string> missing_edits;
};

RecordCheck check_record(const MQRecord& record);

struct CorpusStats {
  /// (hop_count, edit_count) -> records.
  std::map<std::pair<int, int>, int> cells;
  std::map<int, int> by_hop;
  std::map<int, int> by_edits;
  int total = 0;

  int cell(int hops, int edits) const {
    auto it = cells.find({hops, edits});
    return it == cells.end() ? 0 : it->second;
  }
  int hop_total(int hops) const {
    auto it = by_hop.find(hops);
    return it == by_hop.end() ? 0 : it->second;
  }
};

CorpusStats corpus_stats(const std::vector<MQRecord>& records);

/// Answer leakage: some edit's new object equals the gold answer byte-for-byte.
bool detect_leakage(const MQRecord& record);

void to_json(nlohmann::json& j, const Fact& f);
void from_json(const nlohmann::json& j, Fact& f);
void to_json(nlohmann::json& j, const Edit& e);
void from_json(const nlohmann::json& j, Edit& e);
nlohmann::json stats_to_json(const CorpusStats& stats);
/// Text table laid out like the benchmark statistics table (#Edits rows, hop columns).
std::string render_stats_table(const CorpusStats& stats);

}  // namespace mhke
