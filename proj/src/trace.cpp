#include "mhke/trace.hpp"

#include <fmt/format.h>

#include <regex>

#include "mhke/prompts.hpp"
#include "mhke/text.hpp"

namespace mhke {
namespace {

struct HeaderHit {
  Stage stage;
  size_t line_start;
  size_t body_start;
};

const std::regex& header_regex() {
  static const std::regex re(
      R"(^[ \t#>*_]*([1-4])[ \t]*[.)][ \t]*[*_]*[ \t]*(acknowledge updated information|determine relevance|apply updated information or ignore|reasoning)[ \t]*[*_]*[ \t]*:?[ \t]*[*_]*[ \t]*)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

Stage stage_from_title(std::string_view title) {
  const std::string t = text::lower(title);
  if (t.starts_with("acknowledge")) return Stage::acknowledge;
  if (t.starts_with("determine")) return Stage::relevance;
  if (t.starts_with("apply")) return Stage::apply_or_ignore;
  return Stage::reasoning;
}

bool is_leaked_scaffold(std::string_view line) {
  const std::string t = text::trim(line);
  for (std::string_view marker : {"[task]", "[updated information]", "[query]"})
    if (text::starts_with_ci(t, marker)) return true;
  return false;
}

}  // namespace

std::string_view stage_title(Stage s) {
  switch (s) {
    case Stage::acknowledge:
      return "Acknowledge Updated Information";
    case Stage::relevance:
      return "Determine Relevance";
    case Stage::apply_or_ignore:
      return "Apply Updated Information or Ignore";
    case Stage::reasoning:
      return "Reasoning";
  }
  return "";
}

std::string_view stage_key(Stage s) {
  switch (s) {
    case Stage::acknowledge:
      return "acknowledge";
    case Stage::relevance:
      return "relevance";
    case Stage::apply_or_ignore:
      return "apply_or_ignore";
    case Stage::reasoning:
      return "reasoning";
  }
  return "";
}

const std::string& ReasoningTrace::stage(Stage s) const {
  switch (s) {
    case Stage::acknowledge:
      return acknowledge;
    case Stage::relevance:
      return relevance;
    case Stage::apply_or_ignore:
      return apply_or_ignore;
    case Stage::reasoning:
      break;
  }
  return reasoning;
}

std::string& ReasoningTrace::stage(Stage s) {
  return const_cast<std::string&>(static_cast<const ReasoningTrace&>(*this).stage(s));
}

std::string_view failure_kind_name(TraceFailureKind k) {
  switch (k) {
    case TraceFailureKind::missing_stage:
      return "missing_stage";
    case TraceFailureKind::answer_mismatch:
      return "answer_mismatch";
    case TraceFailureKind::order_violation:
      return "order_violation";
    case TraceFailureKind::leaked_format:
      return "leaked_format";
  }
  return "";
}

bool TraceVerdict::has(TraceFailureKind k) const {
  for (const auto& f : failures)
    if (f.kind == k) return true;
  return false;
}

ParsedTrace parse_trace(std::string_view raw, std::string_view expected_answer, MatchMode mode) {
  if (text::trim(raw).empty()) throw TraceParseError("empty trace");

  ParsedTrace out;
  out.trace.raw_text = std::string(raw);
  auto fail = [&](TraceFailureKind k, std::string detail) { out.verdict.failures.push_back({k, std::move(detail)}); };

  std::vector<HeaderHit> headers;
  bool leaked = false;
  for (size_t start = 0; start <= raw.size();) {
    size_t end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    const std::string line(raw.substr(start, end - start));
    std::smatch m;
    if (std::regex_search(line, m, header_regex())) {
      headers.push_back({stage_from_title(m[2].str()), start, start + static_cast<size_t>(m.length(0))});
    } else if (!leaked && is_leaked_scaffold(line)) {
      leaked = true;
      fail(TraceFailureKind::leaked_format, "prompt scaffolding echoed: " + text::trim(line));
    }
    start = end + 1;
  }
  if (headers.empty()) throw TraceParseError("no stage headers found");

  size_t marker_start = raw.size();
  const auto marker_end = last_answer_marker(raw, &marker_start);
  // Emphasis around the marker ("**[Answer]**:") belongs to the marker, not the body before it.
  while (marker_end && marker_start > 0 && std::string_view("*_# \t").find(raw[marker_start - 1]) != std::string_view::npos)
    --marker_start;

  std::array<bool, 4> seen{};
  int last_index = -1;
  bool order_bad = false;
  for (size_t h = 0; h < headers.size(); ++h) {
    const int idx = static_cast<int>(headers[h].stage);
    if (seen[idx]) {
      fail(TraceFailureKind::leaked_format, fmt::format("stage header repeated: {}", stage_key(headers[h].stage)));
      continue;
    }
    seen[idx] = true;
    if (idx < last_index) order_bad = true;
    last_index = std::max(last_index, idx);

    size_t body_end = h + 1 < headers.size() ? headers[h + 1].line_start : raw.size();
    if (marker_end && marker_start >= headers[h].body_start) body_end = std::min(body_end, marker_start);
    if (body_end < headers[h].body_start) body_end = headers[h].body_start;
    out.trace.stage(headers[h].stage) = text::trim(raw.substr(headers[h].body_start, body_end - headers[h].body_start));
  }
  if (order_bad) fail(TraceFailureKind::order_violation, "stage headers out of order");
  if (last_answer_marker(raw.substr(0, headers.back().line_start)))
    fail(TraceFailureKind::order_violation, "answer line precedes a stage header");

  for (Stage s : kStages)
    if (out.trace.stage(s).empty()) fail(TraceFailureKind::missing_stage, std::string(stage_key(s)));

  if (!marker_end) {
    fail(TraceFailureKind::missing_stage, "answer");
  } else {
    out.trace.final_answer = extract_answer(raw);
    if (out.trace.final_answer.empty()) {
      fail(TraceFailureKind::missing_stage, "answer");
    } else if (!answers_match(out.trace.final_answer, expected_answer, mode)) {
      fail(TraceFailureKind::answer_mismatch,
           fmt::format("got \"{}\", expected \"{}\"", out.trace.final_answer, expected_answer));
    }
  }
  out.verdict.ok = out.verdict.failures.empty();
  return out;
}

std::string render_trace(const ReasoningTrace& trace, const std::vector<Stage>& omit) {
  std::string out;
  for (Stage s : kStages) {
    if (std::find(omit.begin(), omit.end(), s) != omit.end()) continue;
    out += fmt::format("{}.{}: {}\n\n", static_cast<int>(s) + 1, stage_title(s), trace.stage(s));
  }
  out += "[Answer]: ";
  out += trace.final_answer;
  return out;
}

TraceGenResult generate_traces(const std::vector<TraceJob>& jobs, llm::ChatClient& teacher,
                               const TraceGenConfig& config) {
  struct Slot {
    std::optional<AcceptedTrace> accepted;
    RejectedTrace rejected;
  };
  std::vector<Slot> slots(jobs.size());
  std::vector<std::string> prompts(jobs.size());
  for (size_t i = 0; i < jobs.size(); ++i) {
    prompts[i] = render_teacher_prompt(jobs[i].editing_set, jobs[i].question, jobs[i].gold_answer, jobs[i].record_id)
                     .rendered_text;
    slots[i].rejected.job = jobs[i];
  }

  std::vector<size_t> pending(jobs.size());
  for (size_t i = 0; i < pending.size(); ++i) pending[i] = i;
  const int max_attempts = 1 + std::max(0, config.retries);
  for (int attempt = 1; attempt <= max_attempts && !pending.empty(); ++attempt) {
    std::vector<llm::ChatRequest> requests;
    requests.reserve(pending.size());
    for (size_t i : pending)
      requests.push_back(llm::ChatRequest::user_prompt(config.model, prompts[i], config.temperature,
                                                       config.max_tokens,
                                                       fmt::format("{}#attempt{}", jobs[i].record_id, attempt)));
    auto results = teacher.complete_batch(requests, config.parallelism);

    std::vector<size_t> next;
    for (size_t r = 0; r < pending.size(); ++r) {
      const size_t i = pending[r];
      auto& rej = slots[i].rejected;
      rej.attempts = attempt;
      rej.reasons.clear();
      if (!results[r].response) {
        rej.reasons.push_back("backend_error");
        rej.detail = results[r].error;
        next.push_back(i);
        continue;
      }
      try {
        auto parsed = parse_trace(results[r].response->text, jobs[i].gold_answer, config.match_mode);
        if (parsed.verdict.ok) {
          slots[i].accepted =
              AcceptedTrace{jobs[i], std::move(parsed.trace), config.model, results[r].response->backend_id, attempt};
          continue;
        }
        rej.detail.clear();
        for (const auto& f : parsed.verdict.failures) {
          std::string name(failure_kind_name(f.kind));
          if (std::find(rej.reasons.begin(), rej.reasons.end(), name) == rej.reasons.end()) rej.reasons.push_back(name);
          rej.detail += (rej.detail.empty() ? "" : "; ") + name + ": " + f.detail;
        }
      } catch (const TraceParseError& e) {
        rej.reasons.push_back("parse_error");
        rej.detail = e.what();
      }
      next.push_back(i);
    }
    pending = std::move(next);
  }

  TraceGenResult out;
  for (auto& s : slots) {
    if (s.accepted) {
      out.accepted.push_back(std::move(*s.accepted));
    } else {
      out.rejected.push_back(std::move(s.rejected));
    }
  }
  return out;
}

nlohmann::json to_json(const AcceptedTrace& t) {
  nlohmann::json stages = nlohmann::json::object();
  for (Stage s : kStages) stages[std::string(stage_key(s))] = t.trace.stage(s);
  return {{"record_id", t.job.record_id},
          {"question", t.job.question},
          {"gold_answer", t.job.gold_answer},
          {"editing_set", to_json(t.job.editing_set)},
          {"trace", std::move(stages)},
          {"final_answer", t.trace.final_answer},
          {"raw_text", t.trace.raw_text},
          {"teacher_model", t.teacher_model},
          {"backend_id", t.backend_id},
          {"attempts", t.attempts}};
}

AcceptedTrace accepted_trace_from_json(const nlohmann::json& j) {
  AcceptedTrace t;
  t.job.record_id = j.at("record_id").get<std::string>();
  t.job.question = j.at("question").get<std::string>();
  t.job.gold_answer = j.value("gold_answer", std::string{});
  t.job.editing_set = editing_set_from_json(j.at("editing_set"));
  const auto& stages = j.at("trace");
  for (Stage s : kStages) t.trace.stage(s) = stages.at(std::string(stage_key(s))).get<std::string>();
  t.trace.final_answer = j.at("final_answer").get<std::string>();
  t.trace.raw_text = j.value("raw_text", std::string{});
  t.teacher_model = j.value("teacher_model", std::string{});
  t.backend_id = j.value("backend_id", std::string{});
  t.attempts = j.value("attempts", 1);
  return t;
}

nlohmann::json to_json(const RejectedTrace& r) {
  return {{"record_id", r.job.record_id},
          {"question", r.job.question},
          {"gold_answer", r.job.gold_answer},
          {"attempts", r.attempts},
          {"reasons", r.reasons},
          {"detail", r.detail}};
}

}  // namespace mhke
