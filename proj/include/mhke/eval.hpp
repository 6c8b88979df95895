#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhke/answer.hpp"
#include "mhke/editing_set.hpp"
#include "mhke/llm/client.hpp"

namespace mhke {

/// Column label for a distractor level: 0 -> "w/o", 1 -> "w/2", 2 -> "w/4".
std::string_view level_label(int k);
int level_from_label(std::string_view label);

struct EvalItem {
  std::string record_id;
  /// Paraphrases; the first is the default question.
  std::vector<std::string> questions;
  EditingSet editing_set;
  std::string gold_answer;
  std::vector<std::string> aliases;
  int hop_count = 0;
  int edit_count = 0;
  int k = 0;
  bool leakage = false;
};

/// Throws std::invalid_argument when the set's distractor count is not
/// edit_count * k.
EvalItem make_eval_item(const MQRecord& record, EditingSet set, int k);

enum class ParaphraseMode { first, any };
std::string_view paraphrase_mode_name(ParaphraseMode m);
ParaphraseMode parse_paraphrase_mode(std::string_view name);

struct EvalConfig {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  size_t parallelism = 4;
  ParaphraseMode paraphrase_mode = ParaphraseMode::first;
  MatchMode em_mode = MatchMode::normalized;
};

struct EvalOutcome {
  std::string record_id;
  int k = 0;
  int hop_count = 0;
  int edit_count = 0;
  bool leakage = false;
  /// Paraphrase whose reply is reported.
  size_t question_index = 0;
  std::string model_text;
  std::string extracted_answer;
  bool correct = false;
  /// Set when the subject call failed; such items count as incorrect.
  std::optional<std::string> error;
  double latency_ms = 0.0;
};

/// One outcome per item, in item order. In `any` mode every paraphrase is
/// asked and the item is correct if one of them is.
std::vector<EvalOutcome> run_eval(const std::vector<EvalItem>& items, llm::ChatClient& subject,
                                  const EvalConfig& config);

nlohmann::json to_json(const EvalOutcome& o);

struct Cell {
  size_t correct = 0;
  size_t total = 0;

  void add(bool ok) {
    ++total;
    correct += ok ? 1 : 0;
  }
  /// Percentage; empty for a cell with no items.
  std::optional<double> accuracy() const;
  bool operator==(const Cell&) const = default;
};

enum class DropMarker { stable, drop, catastrophic };

/// drop = baseline - value in points; > 12 catastrophic, > 6 drop, else stable.
DropMarker drop_marker(double baseline, double value);
std::string_view drop_marker_name(DropMarker m);
/// "↓↓", "↓" or "" (stable).
std::string_view drop_marker_symbol(DropMarker m);

/// Row of three distractor levels (k = 0, 1, 2).
struct LevelRow {
  std::map<int, Cell> levels;

  /// Unweighted mean of the present level accuracies.
  std::optional<double> average() const;
  /// Marker for level k against this row's k = 0 cell, when both exist.
  std::optional<DropMarker> marker(int k) const;
  bool operator==(const LevelRow&) const = default;
};

/// Edit-count group label: "1", "2" or "3&4".
std::string edit_group(int edit_count);

struct RunReport {
  Cell overall;
  LevelRow by_level;
  std::map<int, LevelRow> by_hop;
  std::map<std::string, LevelRow> by_edits;
  LevelRow leakage;
  /// Distinct records with leakage, and distinct records evaluated.
  size_t leaky_records = 0;
  size_t records = 0;
  /// Subject call failures (scored incorrect), per level.
  std::map<int, size_t> failures;
  nlohmann::json manifest = nlohmann::json::object();

  bool operator==(const RunReport&) const = default;
};

/// Throws std::invalid_argument on an empty outcome list.
RunReport aggregate(const std::vector<EvalOutcome>& outcomes);

nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

/// Markdown tables laid out like the multi-hop, multi-edit and
/// answer-exposed result tables. Absent cells print as "-".
std::string render_markdown(const RunReport& r, std::string_view method = "subject");

}  // namespace mhke
