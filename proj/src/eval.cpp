#include "mhke/eval.hpp"

#include <fmt/format.h>

#include <set>
#include <stdexcept>

#include "mhke/prompts.hpp"

namespace mhke {
namespace {

constexpr std::array<int, 3> kLevels{0, 1, 2};

nlohmann::json cell_json(const Cell& c) {
  if (c.total == 0) return nullptr;
  return {{"correct", c.correct}, {"total", c.total}, {"accuracy", *c.accuracy()}};
}

Cell cell_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  return {j.at("correct").get<size_t>(), j.at("total").get<size_t>()};
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json row_json(const LevelRow& row) {
  nlohmann::json j = nlohmann::json::object();
  nlohmann::json markers = nlohmann::json::object();
  for (int k : kLevels) {
    auto it = row.levels.find(k);
    j[std::string(level_label(k))] = it == row.levels.end() ? nlohmann::json(nullptr) : cell_json(it->second);
    if (k > 0) {
      auto m = row.marker(k);
      markers[std::string(level_label(k))] = m ? nlohmann::json(drop_marker_name(*m)) : nlohmann::json(nullptr);
    }
  }
  j["avg"] = optional_json(row.average());
  j["markers"] = std::move(markers);
  return j;
}

LevelRow row_from_json(const nlohmann::json& j) {
  LevelRow row;
  for (int k : kLevels) {
    const auto key = std::string(level_label(k));
    if (j.contains(key) && !j[key].is_null()) row.levels[k] = cell_from_json(j[key]);
  }
  return row;
}

std::string fmt_pct(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "-"; }

std::string fmt_cell(const LevelRow& row, int k) {
  auto it = row.levels.find(k);
  if (it == row.levels.end() || it->second.total == 0) return "-";
  std::string s = fmt_pct(it->second.accuracy());
  if (k > 0) {
    if (auto m = row.marker(k)) {
      auto sym = drop_marker_symbol(*m);
      if (!sym.empty()) s += " " + std::string(sym);
    }
  }
  return s;
}

std::string level_header() { return "w/o Distr. | w/ 2 Distr. | w/ 4 Distr."; }

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string grouped_table(const std::string& method, const std::vector<std::pair<std::string, const LevelRow*>>& groups) {
  std::string head = "| Method |";
  std::string rule = "|---|";
  std::string line = "| " + method + " |";
  std::vector<double> present;
  for (const auto& [name, row] : groups) {
    for (int k : kLevels) {
      head += fmt::format(" {} {} |", name, k == 0 ? "w/o Distr." : (k == 1 ? "w/ 2 Distr." : "w/ 4 Distr."));
      rule += "---|";
      static const LevelRow empty;
      const LevelRow& r = row ? *row : empty;
      line += " " + fmt_cell(r, k) + " |";
      if (auto it = r.levels.find(k); it != r.levels.end() && it->second.total > 0)
        present.push_back(*it->second.accuracy());
    }
  }
  head += " Avg. |";
  rule += "---|";
  line += " " + fmt_pct(mean_of(present)) + " |";
  return head + "\n" + rule + "\n" + line + "\n";
}

std::string level_table(const std::string& method, const LevelRow& row) {
  std::string out = "| Method | " + level_header() + " | Avg. |\n|---|---|---|---|---|\n";
  out += "| " + method + " |";
  for (int k : kLevels) out += " " + fmt_cell(row, k) + " |";
  out += " " + fmt_pct(row.average()) + " |\n";
  return out;
}

}  // namespace

std::string_view level_label(int k) {
  switch (k) {
    case 0:
      return "w/o";
    case 1:
      return "w/2";
    case 2:
      return "w/4";
  }
  throw std::invalid_argument(fmt::format("no distractor level for k={}", k));
}

int level_from_label(std::string_view label) {
  for (int k : kLevels)
    if (level_label(k) == label) return k;
  throw std::invalid_argument("unknown distractor level " + std::string(label));
}

EvalItem make_eval_item(const MQRecord& record, EditingSet set, int k) {
  if (record.questions.empty()) throw std::invalid_argument("record " + record.record_id + " has no questions");
  const size_t expected = record.edits.size() * static_cast<size_t>(k);
  if (set.distractor_count() != expected || set.relevant_count() != record.edits.size())
    throw std::invalid_argument(fmt::format("record {} k={}: editing set has {} relevant / {} distractors, want {} / {}",
                                            record.record_id, k, set.relevant_count(), set.distractor_count(),
                                            record.edits.size(), expected));
  EvalItem item;
  item.record_id = record.record_id;
  item.questions = record.questions;
  item.editing_set = std::move(set);
  item.gold_answer = record.gold_answer;
  item.aliases = record.answer_aliases;
  item.hop_count = record.hop_count;
  item.edit_count = record.edit_count();
  item.k = k;
  item.leakage = detect_leakage(record);
  return item;
}

std::string_view paraphrase_mode_name(ParaphraseMode m) { return m == ParaphraseMode::first ? "first" : "any"; }

ParaphraseMode parse_paraphrase_mode(std::string_view name) {
  if (name == "first") return ParaphraseMode::first;
  if (name == "any") return ParaphraseMode::any;
  throw std::invalid_argument("unknown paraphrase mode: " + std::string(name));
}

std::vector<EvalOutcome> run_eval(const std::vector<EvalItem>& items, llm::ChatClient& subject,
                                  const EvalConfig& config) {
  struct Ask {
    size_t item;
    size_t question;
  };
  std::vector<Ask> asks;
  std::vector<llm::ChatRequest> requests;
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.questions.empty()) throw std::invalid_argument("item " + it.record_id + " has no questions");
    const size_t n = config.paraphrase_mode == ParaphraseMode::any ? it.questions.size() : 1;
    for (size_t q = 0; q < n; ++q) {
      asks.push_back({i, q});
      requests.push_back(llm::ChatRequest::user_prompt(config.model, render_eval_prompt(it.editing_set, it.questions[q]),
                                                       config.temperature, config.max_tokens,
                                                       fmt::format("{}|k{}|q{}", it.record_id, it.k, q)));
    }
  }
  auto results = subject.complete_batch(requests, config.parallelism);

  std::vector<EvalOutcome> out(items.size());
  std::vector<bool> reported(items.size(), false);
  for (size_t i = 0; i < items.size(); ++i) {
    out[i].record_id = items[i].record_id;
    out[i].k = items[i].k;
    out[i].hop_count = items[i].hop_count;
    out[i].edit_count = items[i].edit_count;
    out[i].leakage = items[i].leakage;
  }
  for (size_t a = 0; a < asks.size(); ++a) {
    auto& o = out[asks[a].item];
    const auto& item = items[asks[a].item];
    const auto& res = results[a];
    if (o.correct) continue;
    if (!res.response) {
      if (!reported[asks[a].item]) {
        o.error = res.error;
        o.question_index = asks[a].question;
      }
      continue;
    }
    const std::string extracted = extract_answer(res.response->text);
    const bool ok = exact_match(extracted, item.gold_answer, item.aliases, config.em_mode);
    if (ok || !reported[asks[a].item]) {
      o.question_index = asks[a].question;
      o.model_text = res.response->text;
      o.extracted_answer = extracted;
      o.latency_ms = res.response->latency_ms;
      o.correct = ok;
      o.error.reset();
      reported[asks[a].item] = true;
    }
  }
  return out;
}

nlohmann::json to_json(const EvalOutcome& o) {
  nlohmann::json j = {{"record_id", o.record_id},
                      {"k", o.k},
                      {"level", level_label(o.k)},
                      {"hop_count", o.hop_count},
                      {"edit_count", o.edit_count},
                      {"leakage", o.leakage},
                      {"question_index", o.question_index},
                      {"model_text", o.model_text},
                      {"extracted_answer", o.extracted_answer},
                      {"correct", o.correct},
                      {"latency_ms", o.latency_ms}};
  j["error"] = o.error ? nlohmann::json(*o.error) : nlohmann::json(nullptr);
  return j;
}

std::optional<double> Cell::accuracy() const {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

DropMarker drop_marker(double baseline, double value) {
  const double drop = baseline - value;
  if (drop > 12.0) return DropMarker::catastrophic;
  if (drop > 6.0) return DropMarker::drop;
  return DropMarker::stable;
}

std::string_view drop_marker_name(DropMarker m) {
  switch (m) {
    case DropMarker::stable:
      return "stable";
    case DropMarker::drop:
      return "drop";
    case DropMarker::catastrophic:
      return "catastrophic";
  }
  return "";
}

std::string_view drop_marker_symbol(DropMarker m) {
  switch (m) {
    case DropMarker::catastrophic:
      return "↓↓";
    case DropMarker::drop:
      return "↓";
    default:
      return "";
  }
}

std::optional<double> LevelRow::average() const {
  std::vector<double> v;
  for (const auto& [k, c] : levels)
    if (auto a = c.accuracy()) v.push_back(*a);
  return mean_of(v);
}

std::optional<DropMarker> LevelRow::marker(int k) const {
  auto base = levels.find(0);
  auto cur = levels.find(k);
  if (k == 0 || base == levels.end() || cur == levels.end()) return std::nullopt;
  auto b = base->second.accuracy();
  auto c = cur->second.accuracy();
  if (!b || !c) return std::nullopt;
  return drop_marker(*b, *c);
}

std::string edit_group(int edit_count) {
  if (edit_count >= 3) return "3&4";
  return std::to_string(edit_count);
}

RunReport aggregate(const std::vector<EvalOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate: no outcomes");
  RunReport r;
  std::set<std::string> records, leaky;
  for (const auto& o : outcomes) {
    r.overall.add(o.correct);
    r.by_level.levels[o.k].add(o.correct);
    r.by_hop[o.hop_count].levels[o.k].add(o.correct);
    r.by_edits[edit_group(o.edit_count)].levels[o.k].add(o.correct);
    records.insert(o.record_id);
    if (o.leakage) {
      r.leakage.levels[o.k].add(o.correct);
      leaky.insert(o.record_id);
    }
    if (o.error) ++r.failures[o.k];
  }
  r.records = records.size();
  r.leaky_records = leaky.size();
  return r;
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json by_hop = nlohmann::json::object();
  for (const auto& [h, row] : r.by_hop) by_hop[std::to_string(h)] = row_json(row);
  nlohmann::json by_edits = nlohmann::json::object();
  for (const auto& [g, row] : r.by_edits) by_edits[g] = row_json(row);
  nlohmann::json leakage = row_json(r.leakage);
  leakage["leaky_records"] = r.leaky_records;
  leakage["records"] = r.records;
  nlohmann::json failures = nlohmann::json::object();
  size_t total_failures = 0;
  for (const auto& [k, n] : r.failures) {
    failures[std::string(level_label(k))] = n;
    total_failures += n;
  }
  return {{"overall", cell_json(r.overall)},
          {"by_level", row_json(r.by_level)},
          {"by_hop", std::move(by_hop)},
          {"by_edits", std::move(by_edits)},
          {"leakage", std::move(leakage)},
          {"failures", {{"total", total_failures}, {"by_level", std::move(failures)}}},
          {"manifest", r.manifest}};
}

RunReport run_report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.overall = cell_from_json(j.at("overall"));
  r.by_level = row_from_json(j.at("by_level"));
  for (const auto& [h, row] : j.at("by_hop").items()) r.by_hop[std::stoi(h)] = row_from_json(row);
  for (const auto& [g, row] : j.at("by_edits").items()) r.by_edits[g] = row_from_json(row);
  r.leakage = row_from_json(j.at("leakage"));
  r.leaky_records = j.at("leakage").value("leaky_records", size_t{0});
  r.records = j.at("leakage").value("records", size_t{0});
  if (j.contains("failures"))
    for (const auto& [label, n] : j["failures"].value("by_level", nlohmann::json::object()).items())
      r.failures[level_from_label(label)] = n.get<size_t>();
  r.manifest = j.value("manifest", nlohmann::json::object());
  return r;
}

std::string render_markdown(const RunReport& r, std::string_view method_view) {
  const std::string method(method_view);
  std::string out;
  out += fmt::format("Overall accuracy: {} ({}/{})\n\n", fmt_pct(r.overall.accuracy()), r.overall.correct,
                     r.overall.total);
  out += "### By distractor level\n\n" + level_table(method, r.by_level) + "\n";

  std::set<int> hops{2, 3, 4};
  for (const auto& [h, row] : r.by_hop) hops.insert(h);
  std::vector<std::pair<std::string, const LevelRow*>> hop_groups;
  for (int h : hops) {
    auto it = r.by_hop.find(h);
    hop_groups.emplace_back(fmt::format("{}-hops", h), it == r.by_hop.end() ? nullptr : &it->second);
  }
  out += "### Multi-hop performance\n\n" + grouped_table(method, hop_groups) + "\n";

  std::vector<std::pair<std::string, const LevelRow*>> edit_groups;
  for (const auto& [g, label] : std::vector<std::pair<std::string, std::string>>{
           {"1", "#Edits: 1"}, {"2", "#Edits: 2"}, {"3&4", "#Edits: 3 & 4"}}) {
    auto it = r.by_edits.find(g);
    edit_groups.emplace_back(label, it == r.by_edits.end() ? nullptr : &it->second);
  }
  out += "### Multi-edit performance\n\n" + grouped_table(method, edit_groups) + "\n";

  out += "### Answer-exposed setting\n\n" + level_table(method, r.leakage) + "\n";
  out += fmt::format("Leaky records: {} of {}.\n\n", r.leaky_records, r.records);

  size_t failures = 0;
  for (const auto& [k, n] : r.failures) failures += n;
  out += fmt::format("Subject call failures (scored incorrect): {}.\n\n", failures);
  out += "Markers: ↓ more than 6 points below w/o Distr., ↓↓ more than 12 points below; unmarked cells are stable.\n";
  return out;
}

}  // namespace mhke
