#include "mhke/index.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mhke/hashing.hpp"

namespace mhke {

DistractorIndex::DistractorIndex(std::vector<FactVerbalization> corpus, std::unique_ptr<SimilarityScorer> scorer)
    : DistractorIndex(std::move(corpus), std::move(scorer), Restore{}) {
  scorer_->fit(texts());
}

DistractorIndex::DistractorIndex(std::vector<FactVerbalization> corpus, std::unique_ptr<SimilarityScorer> scorer,
                                 Restore)
    : corpus_(std::move(corpus)), scorer_(std::move(scorer)) {
  if (!scorer_) throw std::invalid_argument("index: no scorer");
  validate_and_hash();
}

void DistractorIndex::validate_and_hash() {
  if (corpus_.empty()) throw std::invalid_argument("index: empty corpus");
  std::string blob;
  for (size_t i = 0; i < corpus_.size(); ++i) {
    const auto& e = corpus_[i];
    if (e.text.empty()) throw std::invalid_argument("index: empty text for " + e.fact_ref);
    if (e.phase != corpus_.front().phase) throw std::invalid_argument("index: corpus mixes phases");
    if (!by_ref_.emplace(e.fact_ref, i).second) throw std::invalid_argument("index: duplicate fact_ref " + e.fact_ref);
    blob += e.fact_ref;
    blob += '\x1f';
    blob += e.text;
    blob += '\n';
  }
  corpus_hash_ = sha256_hex(blob);
}

std::vector<std::string> DistractorIndex::texts() const {
  std::vector<std::string> out;
  out.reserve(corpus_.size());
  for (const auto& e : corpus_) out.push_back(e.text);
  return out;
}

std::optional<size_t> DistractorIndex::find(const std::string& fact_ref) const {
  auto it = by_ref_.find(fact_ref);
  if (it == by_ref_.end()) return std::nullopt;
  return it->second;
}

TopKResult DistractorIndex::topk(std::string_view query_text, size_t k, const Exclusions& ex) const {
  TopKResult out;
  if (k == 0) return out;
  const auto scores = scorer_->score_corpus(query_text);
  std::vector<size_t> pool;
  pool.reserve(corpus_.size());
  for (size_t i = 0; i < corpus_.size(); ++i) {
    if (ex.fact_refs.count(corpus_[i].fact_ref)) continue;
    if (ex.predicate && ex.predicate(i)) continue;
    pool.push_back(i);
  }
  const size_t take = std::min(k, pool.size());
  auto better = [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return corpus_[a].fact_ref < corpus_[b].fact_ref;
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), better);
  for (size_t r = 0; r < take; ++r)
    out.candidates.push_back({corpus_[pool[r]].fact_ref, scores[pool[r]], static_cast<int>(r + 1)});
  if (take < k) out.warning = fmt::format("requested {} candidates, only {} available after exclusions", k, take);
  return out;
}

void DistractorIndex::save(const std::filesystem::path& path) const {
  nlohmann::json j = {{"version", kSidecarVersion},
                      {"scorer_id", scorer_->id()},
                      {"corpus_hash", corpus_hash_},
                      {"corpus_size", corpus_.size()},
                      {"scorer_state", scorer_->state()}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

DistractorIndex DistractorIndex::load_or_build(const std::filesystem::path& sidecar,
                                               std::vector<FactVerbalization> corpus,
                                               std::unique_ptr<SimilarityScorer> scorer, bool* reused) {
  DistractorIndex idx(std::move(corpus), std::move(scorer), Restore{});
  bool ok = false;
  if (std::ifstream in(sidecar, std::ios::binary); in) {
    try {
      auto j = nlohmann::json::parse(in);
      ok = j.value("version", 0) == kSidecarVersion && j.value("scorer_id", std::string{}) == idx.scorer_->id() &&
           j.value("corpus_hash", std::string{}) == idx.corpus_hash_ &&
           idx.scorer_->restore(j.value("scorer_state", nlohmann::json::object()), idx.texts());
    } catch (const nlohmann::json::exception&) {
      ok = false;
    }
  }
  if (!ok) {
    idx.scorer_->fit(idx.texts());
    idx.save(sidecar);
  }
  if (reused) *reused = ok;
  return idx;
}

}  // namespace mhke
