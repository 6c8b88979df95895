#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhke/answer.hpp"
#include "mhke/editing_set.hpp"
#include "mhke/llm/client.hpp"

namespace mhke {

enum class Stage { acknowledge = 0, relevance = 1, apply_or_ignore = 2, reasoning = 3 };

inline constexpr std::array<Stage, 4> kStages = {Stage::acknowledge, Stage::relevance, Stage::apply_or_ignore,
                                                 Stage::reasoning};

/// Header title as written after the step number, e.g. "Determine Relevance".
std::string_view stage_title(Stage s);
/// Field name used in JSON, e.g. "apply_or_ignore".
std::string_view stage_key(Stage s);

struct ReasoningTrace {
  std::string acknowledge;
  std::string relevance;
  std::string apply_or_ignore;
  std::string reasoning;
  std::string final_answer;
  std::string raw_text;

  const std::string& stage(Stage s) const;
  std::string& stage(Stage s);
  bool operator==(const ReasoningTrace&) const = default;
};

enum class TraceFailureKind { missing_stage, answer_mismatch, order_violation, leaked_format };

std::string_view failure_kind_name(TraceFailureKind k);

struct TraceFailure {
  TraceFailureKind kind;
  std::string detail;
};

struct TraceVerdict {
  bool ok = true;
  std::vector<TraceFailure> failures;

  bool has(TraceFailureKind k) const;
};

/// Raw text with no recognizable stage header at all.
class TraceParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParsedTrace {
  ReasoningTrace trace;
  TraceVerdict verdict;
};

/// Splits a teacher reply into its four stages and final answer.
///
/// Headers look like "1.Acknowledge Updated Information:"; a space after the
/// number, markdown emphasis or heading marks around the header, and any
/// letter case are accepted. The final answer is read as in extract_answer.
ParsedTrace parse_trace(std::string_view raw, std::string_view expected_answer,
                        MatchMode mode = MatchMode::normalized);

/// Plain-numbered rendering used for SFT targets:
///   "1.Acknowledge Updated Information: ...\n\n2.Determine Relevance: ...\n\n...\n\n[Answer]: X"
/// Stages in `omit` are left out; the remaining ones keep their numbers.
std::string render_trace(const ReasoningTrace& trace, const std::vector<Stage>& omit = {});

/// One teacher request.
struct TraceJob {
  std::string record_id;
  std::string question;
  std::string gold_answer;
  EditingSet editing_set;
};

struct TraceGenConfig {
  std::string model;
  double temperature = 0.6;
  int max_tokens = 2048;
  /// Extra attempts after a bad trace or failed call.
  int retries = 2;
  size_t parallelism = 4;
  MatchMode match_mode = MatchMode::normalized;
};

struct AcceptedTrace {
  TraceJob job;
  ReasoningTrace trace;
  std::string teacher_model;
  std::string backend_id;
  int attempts = 0;
};

struct RejectedTrace {
  TraceJob job;
  int attempts = 0;
  /// Failure kind names or "backend_error"/"parse_error", from the last attempt.
  std::vector<std::string> reasons;
  std::string detail;
};

struct TraceGenResult {
  std::vector<AcceptedTrace> accepted;
  std::vector<RejectedTrace> rejected;
};

/// Runs teacher prompts in rounds; items with a bad trace or failed call go
/// to the next round (temperature unchanged, request tag carries the attempt
/// number) until they pass or retries run out. Output keeps input order.
TraceGenResult generate_traces(const std::vector<TraceJob>& jobs, llm::ChatClient& teacher,
                               const TraceGenConfig& config);

nlohmann::json to_json(const AcceptedTrace& t);
AcceptedTrace accepted_trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RejectedTrace& r);

}  // namespace mhke
