#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mhke/index.hpp"
#include "mhke/model.hpp"

namespace mhke {

enum class Provenance { relevant, distractor };

struct EditingEntry {
  Edit edit;
  Provenance provenance = Provenance::relevant;
  /// Pool reference for distractors; empty for relevant entries.
  std::string fact_ref;

  bool operator==(const EditingEntry&) const = default;
};

/// The edit facts shown to the model for one question.
struct EditingSet {
  std::vector<EditingEntry> entries;
  std::uint64_t shuffle_seed = 0;

  bool operator==(const EditingSet&) const = default;

  size_t relevant_count() const;
  size_t distractor_count() const;
};

/// (subject, relation) identity used to keep distractors from contradicting
/// a relevant edit. Relation compares by relation_id when present.
std::string subject_relation_key(const Edit& e);

/// Combines the record's edits (relevant) with `distractors` and shuffles
/// with `seed`. Throws std::invalid_argument if a distractor shares a
/// subject-relation key with a relevant edit.
EditingSet assemble_editing_set(const MQRecord& record, const std::vector<EditingEntry>& distractors,
                                std::uint64_t seed);

/// Deduplicated pool of every edit in a corpus; the distractor candidates.
/// fact_ref is "<record_id>#<edit index>" of the first occurrence.
struct EditPool {
  std::vector<std::string> refs;
  std::vector<Edit> edits;
  std::vector<std::string> sr_keys;
};

EditPool build_edit_pool(const std::vector<MQRecord>& records);

/// Index over the pool's pre-edit verbalizations.
DistractorIndex build_distractor_index(const EditPool& pool, std::unique_ptr<SimilarityScorer> scorer);

struct DistractorHit {
  ScoredCandidate candidate;
  Edit post_edit;
};

struct DistractorQuery {
  std::vector<DistractorHit> hits;
  std::optional<std::string> warning;
};

/// Top-k pool edits for one supporting fact, queried with its pre-edit
/// sentence and mapped to the post-edit form. Candidates whose
/// subject-relation key is in `blocked_keys` are skipped.
DistractorQuery topk_distractors(const DistractorIndex& index, const EditPool& pool, const Edit& supporting,
                                 size_t k, const Exclusions& exclusions, const std::set<std::string>& blocked_keys);

struct DistractorSelection {
  std::vector<EditingEntry> distractors;
  std::vector<std::string> warnings;
};

/// Evaluation sets: k distractors per supporting fact, n = m * k overall.
DistractorSelection select_eval_distractors(const DistractorIndex& index, const EditPool& pool,
                                            const MQRecord& record, size_t k);

/// Training sets: exactly `total` distractors, taken round-robin across the
/// supporting facts' ranked candidates (rank 1 of every fact, then rank 2, ...).
DistractorSelection select_training_distractors(const DistractorIndex& index, const EditPool& pool,
                                                const MQRecord& record, size_t total);

/// Bucket fractions for 0, 2 and 4 distractors.
struct MixtureRatios {
  double zero = 0.90;
  double two = 0.05;
  double four = 0.05;
};

/// Largest-remainder (Hamilton) apportionment of `n` items; equal remainders
/// go to the lower bucket. Throws if the ratios do not sum to 1 (1e-9).
std::array<size_t, 3> apportion(size_t n, const MixtureRatios& ratios);

/// Per-record distractor counts in {0, 2, 4}, apportioned then shuffled.
std::vector<int> plan_training_mixture(size_t record_count, const MixtureRatios& ratios, std::uint64_t seed);

std::string_view provenance_name(Provenance p);
nlohmann::json to_json(const EditingSet& set);
EditingSet editing_set_from_json(const nlohmann::json& j);

}  // namespace mhke
