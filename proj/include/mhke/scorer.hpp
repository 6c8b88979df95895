#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace mhke {

/// Similarity between short fact sentences, fitted to a corpus.
///
/// `score_corpus` is the fast path used by the index; `score` is the pairwise
/// form used by brute-force oracles. Both must agree exactly for a fitted scorer.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;

  /// Stable identifier; part of the index sidecar key.
  virtual std::string id() const = 0;
  virtual void fit(std::span<const std::string> corpus) = 0;
  /// One score per fitted corpus item, higher = more similar.
  virtual std::vector<double> score_corpus(std::string_view query) const = 0;
  virtual double score(std::string_view a, std::string_view b) const = 0;

  /// Fitted state worth persisting (may be empty when refitting is cheap).
  virtual nlohmann::json state() const = 0;
  /// Restores fitted state for `corpus`; false if `state` is unusable.
  virtual bool restore(const nlohmann::json& state, std::span<const std::string> corpus) = 0;
};

/// Cosine over TF-IDF vectors of lowercased word unigrams and per-word
/// character trigrams. Scores lie in [0, 1]; identical text scores 1.
class LexicalScorer final : public SimilarityScorer {
 public:
  std::string id() const override { return "lexical-tfidf-v1"; }
  void fit(std::span<const std::string> corpus) override;
  std::vector<double> score_corpus(std::string_view query) const override;
  double score(std::string_view a, std::string_view b) const override;
  nlohmann::json state() const override { return nlohmann::json::object(); }
  bool restore(const nlohmann::json& state, std::span<const std::string> corpus) override;

  /// Raw feature multiset of a text ("w:<word>" and "c:<trigram>").
  static std::unordered_map<std::string, int> features(std::string_view text);

 private:
  // Sorted by feature id; the OOV part only contributes to the norm.
  struct SparseVec {
    std::vector<std::pair<int, double>> terms;
  };
  SparseVec vectorize(std::string_view text) const;

  std::unordered_map<std::string, int> vocab_;
  std::vector<double> idf_;
  size_t corpus_size_ = 0;
  std::vector<std::vector<std::pair<size_t, double>>> postings_;
};

/// Maps a batch of strings to embedding vectors (one per input, same order).
using Embedder = std::function<std::vector<std::vector<float>>(const std::vector<std::string>&)>;

/// Offline embedder: signed feature hashing of words and character trigrams
/// into `dim` buckets. Deterministic; no network.
Embedder hashing_embedder(size_t dim = 256);

/// Cosine similarity of externally computed embeddings. Vectors are L2
/// normalized once and cached by text; scoring runs through the SIMD kernels.
class EmbeddingScorer final : public SimilarityScorer {
 public:
  EmbeddingScorer(Embedder embedder, std::string model, size_t batch_size = 64, size_t parallelism = 1);

  std::string id() const override { return "embedding:" + model_; }
  void fit(std::span<const std::string> corpus) override;
  std::vector<double> score_corpus(std::string_view query) const override;
  double score(std::string_view a, std::string_view b) const override;
  nlohmann::json state() const override;
  bool restore(const nlohmann::json& state, std::span<const std::string> corpus) override;

  size_t embed_calls() const { return embed_calls_; }

 private:
  std::vector<float> embed_one(std::string_view text) const;

  Embedder embedder_;
  std::string model_;
  size_t batch_size_;
  size_t parallelism_;
  size_t dim_ = 0;
  std::vector<float> matrix_;  // row-major, corpus_size x dim_
  size_t rows_ = 0;
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<std::string, std::vector<float>> query_cache_;
  mutable size_t embed_calls_ = 0;
};

}  // namespace mhke
