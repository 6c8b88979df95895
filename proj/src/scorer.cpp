#include "mhke/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mhke/parallel.hpp"
#include "mhke/simd/kernels.hpp"
#include "mhke/text.hpp"

namespace mhke {

std::unordered_map<std::string, int> LexicalScorer::features(std::string_view s) {
  std::unordered_map<std::string, int> out;
  for (const auto& w : text::words(s)) {
    ++out["w:" + w];
    auto cps = text::code_points(w);
    cps.insert(cps.begin(), " ");
    cps.emplace_back(" ");
    for (size_t i = 0; i + 3 <= cps.size(); ++i) ++out["c:" + cps[i] + cps[i + 1] + cps[i + 2]];
  }
  return out;
}

void LexicalScorer::fit(std::span<const std::string> corpus) {
  vocab_.clear();
  corpus_size_ = corpus.size();
  std::vector<int> df;
  std::vector<std::unordered_map<std::string, int>> feats;
  feats.reserve(corpus.size());
  for (const auto& doc : corpus) {
    feats.push_back(features(doc));
    for (const auto& [f, _] : feats.back()) {
      auto [it, inserted] = vocab_.try_emplace(f, static_cast<int>(df.size()));
      if (inserted) df.push_back(0);
      ++df[it->second];
    }
  }
  idf_.resize(df.size());
  const double n = static_cast<double>(corpus_size_);
  for (size_t i = 0; i < df.size(); ++i) idf_[i] = std::log((1.0 + n) / (1.0 + df[i])) + 1.0;

  postings_.assign(df.size(), {});
  for (size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& [id, w] : vectorize(corpus[d]).terms) postings_[id].emplace_back(d, w);
  }
}

bool LexicalScorer::restore(const nlohmann::json&, std::span<const std::string> corpus) {
  fit(corpus);
  return true;
}

LexicalScorer::SparseVec LexicalScorer::vectorize(std::string_view s) const {
  SparseVec v;
  double sq = 0.0;
  const double oov_idf = std::log(1.0 + static_cast<double>(corpus_size_)) + 1.0;
  for (const auto& [f, count] : features(s)) {
    auto it = vocab_.find(f);
    double w = count * (it == vocab_.end() ? oov_idf : idf_[it->second]);
    sq += w * w;
    if (it != vocab_.end()) v.terms.emplace_back(it->second, w);
  }
  std::sort(v.terms.begin(), v.terms.end());
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& t : v.terms) t.second *= inv;
  }
  return v;
}

std::vector<double> LexicalScorer::score_corpus(std::string_view query) const {
  std::vector<double> scores(corpus_size_, 0.0);
  for (const auto& [id, qw] : vectorize(query).terms)
    for (const auto& [doc, dw] : postings_[id]) scores[doc] += qw * dw;
  for (auto& s : scores) s = std::clamp(s, 0.0, 1.0);
  return scores;
}

double LexicalScorer::score(std::string_view a, std::string_view b) const {
  // Same term order and products as score_corpus so results are bit-identical.
  const auto va = vectorize(a);
  const auto vb = vectorize(b);
  double acc = 0.0;
  auto ib = vb.terms.begin();
  for (const auto& [id, w] : va.terms) {
    while (ib != vb.terms.end() && ib->first < id) ++ib;
    if (ib != vb.terms.end() && ib->first == id) acc += w * ib->second;
  }
  return std::clamp(acc, 0.0, 1.0);
}

EmbeddingScorer::EmbeddingScorer(Embedder embedder, std::string model, size_t batch_size, size_t parallelism)
    : embedder_(std::move(embedder)),
      model_(std::move(model)),
      batch_size_(std::max<size_t>(1, batch_size)),
      parallelism_(std::max<size_t>(1, parallelism)) {}

void EmbeddingScorer::fit(std::span<const std::string> corpus) {
  const size_t batches = (corpus.size() + batch_size_ - 1) / batch_size_;
  std::vector<std::vector<std::vector<float>>> out(batches);
  parallel_for(batches, parallelism_, [&](size_t b) {
    std::vector<std::string> chunk(corpus.begin() + b * batch_size_,
                                   corpus.begin() + std::min(corpus.size(), (b + 1) * batch_size_));
    out[b] = embedder_(chunk);
    if (out[b].size() != chunk.size()) throw std::runtime_error("embedder returned wrong number of vectors");
  });
  embed_calls_ += batches;
  rows_ = corpus.size();
  dim_ = rows_ ? out.front().front().size() : 0;
  matrix_.clear();
  matrix_.reserve(rows_ * dim_);
  for (auto& batch : out) {
    for (auto& v : batch) {
      if (v.size() != dim_) throw std::runtime_error("embedding dimension mismatch");
      simd::normalize(v);
      matrix_.insert(matrix_.end(), v.begin(), v.end());
    }
  }
}

std::vector<float> EmbeddingScorer::embed_one(std::string_view t) const {
  std::string key(t);
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = query_cache_.find(key); it != query_cache_.end()) return it->second;
  }
  auto vecs = embedder_({key});
  if (vecs.size() != 1 || (dim_ && vecs[0].size() != dim_)) throw std::runtime_error("embedding dimension mismatch");
  simd::normalize(vecs[0]);
  std::lock_guard lock(cache_mu_);
  ++embed_calls_;
  return query_cache_.emplace(std::move(key), std::move(vecs[0])).first->second;
}

std::vector<double> EmbeddingScorer::score_corpus(std::string_view query) const {
  const auto q = embed_one(query);
  std::vector<float> raw(rows_);
  simd::dot_rows(matrix_, dim_, q, raw);
  return {raw.begin(), raw.end()};
}

double EmbeddingScorer::score(std::string_view a, std::string_view b) const {
  const auto va = embed_one(a);
  const auto vb = embed_one(b);
  return simd::dot(va, vb);
}

nlohmann::json EmbeddingScorer::state() const {
  return {{"dim", dim_}, {"rows", rows_}, {"matrix", matrix_}};
}

bool EmbeddingScorer::restore(const nlohmann::json& state, std::span<const std::string> corpus) {
  if (!state.is_object() || !state.contains("matrix")) return false;
  const auto rows = state.value("rows", size_t{0});
  const auto dim = state.value("dim", size_t{0});
  if (rows != corpus.size()) return false;
  auto m = state.at("matrix").get<std::vector<float>>();
  if (m.size() != rows * dim) return false;
  rows_ = rows;
  dim_ = dim;
  matrix_ = std::move(m);
  return true;
}

Embedder hashing_embedder(size_t dim) {
  if (dim == 0) throw std::invalid_argument("hashing embedder needs dim > 0");
  return [dim](const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      std::vector<float> v(dim, 0.0f);
      for (const auto& [feat, count] : LexicalScorer::features(t)) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : feat) h = (h ^ c) * 1099511628211ull;
        v[h % dim] += (h >> 63) ? -static_cast<float>(count) : static_cast<float>(count);
      }
      out.push_back(std::move(v));
    }
    return out;
  };
}

}  // namespace mhke
