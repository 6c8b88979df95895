#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mhke/scorer.hpp"
#include "mhke/verbalize.hpp"

namespace mhke {

struct ScoredCandidate {
  std::string fact_ref;
  double score = 0.0;
  int rank = 0;  // 1-based
};

struct Exclusions {
  std::set<std::string> fact_refs;
  /// Extra filter over corpus positions; true = skip.
  std::function<bool(size_t)> predicate;
};

struct TopKResult {
  std::vector<ScoredCandidate> candidates;
  /// Set when fewer than k candidates survived the exclusions.
  std::optional<std::string> warning;
};

/// Exact top-k index over fact verbalizations of one phase. Immutable after
/// construction; concurrent queries are safe when the scorer's scoring
/// methods are (both built-in scorers are).
///
/// Ranking: score descending, ties by fact_ref ascending.
class DistractorIndex {
 public:
  /// Throws std::invalid_argument on an empty corpus, duplicate fact_refs or
  /// mixed phases.
  DistractorIndex(std::vector<FactVerbalization> corpus, std::unique_ptr<SimilarityScorer> scorer);

  TopKResult topk(std::string_view query_text, size_t k, const Exclusions& exclusions = {}) const;

  size_t size() const { return corpus_.size(); }
  const FactVerbalization& entry(size_t i) const { return corpus_[i]; }
  std::optional<size_t> find(const std::string& fact_ref) const;
  const SimilarityScorer& scorer() const { return *scorer_; }

  /// Hash over (fact_ref, text) pairs in corpus order.
  const std::string& corpus_hash() const { return corpus_hash_; }

  /// Writes a JSON sidecar {version, scorer_id, corpus_hash, scorer_state}.
  void save(const std::filesystem::path& path) const;

  /// Builds an index, restoring scorer state from `sidecar` when its version,
  /// scorer id and corpus hash all match; otherwise fits from scratch and
  /// rewrites the sidecar. `reused` reports which happened.
  static DistractorIndex load_or_build(const std::filesystem::path& sidecar, std::vector<FactVerbalization> corpus,
                                       std::unique_ptr<SimilarityScorer> scorer, bool* reused = nullptr);

  static constexpr int kSidecarVersion = 1;

 private:
  struct Restore {};
  DistractorIndex(std::vector<FactVerbalization> corpus, std::unique_ptr<SimilarityScorer> scorer, Restore);
  void validate_and_hash();
  std::vector<std::string> texts() const;

  std::vector<FactVerbalization> corpus_;
  std::unique_ptr<SimilarityScorer> scorer_;
  std::unordered_map<std::string, size_t> by_ref_;
  std::string corpus_hash_;
};

}  // namespace mhke
