#include "mhke/editing_set.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mhke/rng.hpp"
#include "mhke/text.hpp"

namespace mhke {

size_t EditingSet::relevant_count() const {
  return static_cast<size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.provenance == Provenance::relevant; }));
}

size_t EditingSet::distractor_count() const { return entries.size() - relevant_count(); }

std::string subject_relation_key(const Edit& e) {
  return text::entity_key(e.subject) + '\x1f' +
         (e.relation_id.empty() ? text::entity_key(e.relation) : "#" + e.relation_id);
}

EditingSet assemble_editing_set(const MQRecord& record, const std::vector<EditingEntry>& distractors,
                                std::uint64_t seed) {
  std::set<std::string> relevant_keys;
  for (const auto& e : record.edits) relevant_keys.insert(subject_relation_key(e));
  EditingSet set;
  set.shuffle_seed = seed;
  for (const auto& e : record.edits) set.entries.push_back({e, Provenance::relevant, {}});
  for (const auto& d : distractors) {
    if (relevant_keys.count(subject_relation_key(d.edit)))
      throw std::invalid_argument(fmt::format("distractor ({}, {}) overlaps a relevant edit of record {}",
                                              d.edit.subject, d.edit.relation, record.record_id));
    set.entries.push_back({d.edit, Provenance::distractor, d.fact_ref});
  }
  seeded_shuffle(std::span(set.entries), seed);
  return set;
}

EditPool build_edit_pool(const std::vector<MQRecord>& records) {
  EditPool pool;
  std::set<std::string> seen;
  for (const auto& r : records) {
    for (size_t i = 0; i < r.edits.size(); ++i) {
      const auto& e = r.edits[i];
      auto key = subject_relation_key(e) + '\x1f' + text::entity_key(e.new_object);
      if (!seen.insert(key).second) continue;
      pool.refs.push_back(fmt::format("{}#{}", r.record_id, i));
      pool.edits.push_back(e);
      pool.sr_keys.push_back(subject_relation_key(e));
    }
  }
  return pool;
}

DistractorIndex build_distractor_index(const EditPool& pool, std::unique_ptr<SimilarityScorer> scorer) {
  std::vector<FactVerbalization> corpus;
  corpus.reserve(pool.edits.size());
  for (size_t i = 0; i < pool.edits.size(); ++i) corpus.push_back(verbalize(pool.edits[i], Phase::pre_edit, pool.refs[i]));
  return DistractorIndex(std::move(corpus), std::move(scorer));
}

namespace {

const Edit& pool_edit(const DistractorIndex& index, const EditPool& pool, const std::string& ref) {
  auto pos = index.find(ref);
  if (!pos || *pos >= pool.edits.size() || pool.refs[*pos] != ref)
    throw std::logic_error("index and pool disagree on " + ref);
  return pool.edits[*pos];
}

std::set<std::string> relevant_keys(const MQRecord& record) {
  std::set<std::string> keys;
  for (const auto& e : record.edits) keys.insert(subject_relation_key(e));
  return keys;
}

}  // namespace

DistractorQuery topk_distractors(const DistractorIndex& index, const EditPool& pool, const Edit& supporting,
                                 size_t k, const Exclusions& exclusions, const std::set<std::string>& blocked_keys) {
  Exclusions ex{exclusions.fact_refs, [&](size_t i) {
                  if (exclusions.predicate && exclusions.predicate(i)) return true;
                  return i < pool.sr_keys.size() && blocked_keys.count(pool.sr_keys[i]) > 0;
                }};
  auto res = index.topk(verbalize(supporting.before()), k, ex);
  DistractorQuery out;
  out.warning = res.warning;
  for (auto& c : res.candidates) {
    const Edit& post = pool_edit(index, pool, c.fact_ref);
    out.hits.push_back({std::move(c), post});
  }
  return out;
}

DistractorSelection select_eval_distractors(const DistractorIndex& index, const EditPool& pool,
                                            const MQRecord& record, size_t k) {
  DistractorSelection out;
  if (k == 0) return out;
  auto blocked = relevant_keys(record);
  for (const auto& supporting : record.edits) {
    // Two pool edits may share a subject-relation key; take the better one
    // and keep widening the window until k distinct keys are found.
    size_t taken = 0;
    for (size_t window = k;; window = std::min(index.size(), window * 2)) {
      auto q = topk_distractors(index, pool, supporting, window, {}, blocked);
      std::set<std::string> local = blocked;
      std::vector<DistractorHit> picked;
      for (auto& h : q.hits) {
        if (picked.size() == k) break;
        if (local.insert(subject_relation_key(h.post_edit)).second) picked.push_back(std::move(h));
      }
      if (picked.size() < k && q.hits.size() == window && window < index.size()) continue;
      for (auto& h : picked) {
        blocked.insert(subject_relation_key(h.post_edit));
        out.distractors.push_back({h.post_edit, Provenance::distractor, h.candidate.fact_ref});
      }
      taken = picked.size();
      break;
    }
    if (taken < k)
      out.warnings.push_back(
          fmt::format("{}: requested {} distractors for one fact, only {} available", record.record_id, k, taken));
  }
  return out;
}

DistractorSelection select_training_distractors(const DistractorIndex& index, const EditPool& pool,
                                                const MQRecord& record, size_t total) {
  DistractorSelection out;
  if (total == 0) return out;
  const auto own = relevant_keys(record);
  std::vector<std::vector<DistractorHit>> ranked;
  for (const auto& supporting : record.edits) ranked.push_back(topk_distractors(index, pool, supporting, total, {}, own).hits);
  std::set<std::string> taken = own;
  for (size_t depth = 0; depth < total && out.distractors.size() < total; ++depth) {
    for (const auto& list : ranked) {
      if (out.distractors.size() == total) break;
      if (depth >= list.size()) continue;
      const auto& h = list[depth];
      if (!taken.insert(subject_relation_key(h.post_edit)).second) continue;
      out.distractors.push_back({h.post_edit, Provenance::distractor, h.candidate.fact_ref});
    }
  }
  // Duplicates across supporting facts can leave a shortfall; pad from the
  // global ranking of the first supporting fact.
  if (out.distractors.size() < total && !record.edits.empty()) {
    auto q = topk_distractors(index, pool, record.edits.front(), index.size(), {}, taken);
    for (const auto& h : q.hits) {
      if (out.distractors.size() == total) break;
      if (!taken.insert(subject_relation_key(h.post_edit)).second) continue;
      out.distractors.push_back({h.post_edit, Provenance::distractor, h.candidate.fact_ref});
    }
  }
  if (out.distractors.size() < total)
    out.warnings.push_back(fmt::format("{}: only {} of {} training distractors available", record.record_id,
                                       out.distractors.size(), total));
  return out;
}

std::array<size_t, 3> apportion(size_t n, const MixtureRatios& r) {
  const std::array<double, 3> ratios{r.zero, r.two, r.four};
  double sum = 0.0;
  for (double x : ratios) {
    if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("mixture ratios must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("mixture ratios sum to {}, not 1", sum));
  std::array<size_t, 3> counts{};
  std::array<double, 3> rem{};
  size_t assigned = 0;
  for (size_t b = 0; b < 3; ++b) {
    const double quota = ratios[b] * static_cast<double>(n);
    counts[b] = static_cast<size_t>(std::floor(quota + 1e-9));
    rem[b] = quota - static_cast<double>(counts[b]);
    assigned += counts[b];
  }
  std::array<size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return rem[a] > rem[b] + 1e-9; });
  for (size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
  return counts;
}

std::vector<int> plan_training_mixture(size_t record_count, const MixtureRatios& ratios, std::uint64_t seed) {
  if (record_count == 0) throw std::invalid_argument("mixture: no records");
  const auto counts = apportion(record_count, ratios);
  std::vector<int> plan;
  plan.reserve(record_count);
  constexpr std::array<int, 3> kLevels{0, 2, 4};
  for (size_t b = 0; b < 3; ++b) plan.insert(plan.end(), counts[b], kLevels[b]);
  seeded_shuffle(std::span(plan), seed);
  return plan;
}

std::string_view provenance_name(Provenance p) { return p == Provenance::relevant ? "relevant" : "distractor"; }

nlohmann::json to_json(const EditingSet& set) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : set.entries) {
    nlohmann::json j = e.edit;
    j["provenance"] = provenance_name(e.provenance);
    if (!e.fact_ref.empty()) j["fact_ref"] = e.fact_ref;
    entries.push_back(std::move(j));
  }
  return {{"shuffle_seed", set.shuffle_seed}, {"entries", std::move(entries)}};
}

EditingSet editing_set_from_json(const nlohmann::json& j) {
  EditingSet set;
  set.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  for (const auto& e : j.at("entries")) {
    EditingEntry entry;
    entry.edit = e.get<Edit>();
    const auto prov = e.at("provenance").get<std::string>();
    if (prov != "relevant" && prov != "distractor") throw std::invalid_argument("bad provenance " + prov);
    entry.provenance = prov == "relevant" ? Provenance::relevant : Provenance::distractor;
    entry.fact_ref = e.value("fact_ref", std::string{});
    set.entries.push_back(std::move(entry));
  }
  return set;
}

}  // namespace mhke
