#include <fstream>
#include <thread>

#include "mhke/llm/backend.hpp"
#include "mhke/text.hpp"

namespace mhke::llm {
namespace {

/// Content following the last line-leading `marker`; the rest of that line,
/// or the next non-empty line when the marker ends its line.
std::string after_last_marker(const std::string& prompt, std::string_view marker) {
  auto lines = text::split_lines(prompt);
  for (size_t i = lines.size(); i-- > 0;) {
    std::string line = text::trim(lines[i]);
    if (!text::starts_with_ci(line, marker)) continue;
    std::string rest = text::trim(std::string_view(line).substr(marker.size()));
    if (!rest.empty()) return rest;
    for (size_t j = i + 1; j < lines.size(); ++j)
      if (auto t = text::trim(lines[j]); !t.empty()) return t;
    return {};
  }
  return {};
}

std::string updated_information(const std::string& prompt) {
  auto lines = text::split_lines(prompt);
  constexpr std::string_view kMarker = "[Updated Information]:";
  for (size_t i = lines.size(); i-- > 0;) {
    std::string line = text::trim(lines[i]);
    if (!text::starts_with_ci(line, kMarker)) continue;
    std::string out = text::trim(std::string_view(line).substr(kMarker.size()));
    for (size_t j = i + 1; j < lines.size(); ++j) {
      std::string t = text::trim(lines[j]);
      if (t.empty()) continue;
      if (t.front() == '[') break;
      out += (out.empty() ? "" : " ") + t;
    }
    return out;
  }
  return {};
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

}  // namespace

std::string splice_template(const std::string& tmpl, const std::string& prompt, const std::smatch* match) {
  if (tmpl.find("{{") == std::string::npos) return tmpl;
  std::string out = tmpl;
  if (out.find("{{answer}}") != std::string::npos) replace_all(out, "{{answer}}", after_last_marker(prompt, "[Answer]:"));
  if (out.find("{{query}}") != std::string::npos) replace_all(out, "{{query}}", after_last_marker(prompt, "[Query]:"));
  if (out.find("{{updated_information}}") != std::string::npos)
    replace_all(out, "{{updated_information}}", updated_information(prompt));
  if (match) {
    for (size_t g = 0; g < match->size(); ++g) replace_all(out, "{{group:" + std::to_string(g) + "}}", (*match)[g].str());
  }
  return out;
}

MockScript mock_script_from_json(const nlohmann::json& j) {
  MockScript s;
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    MockRule rule;
    rule.pattern = r.at("match").get<std::string>();
    rule.regex = r.value("regex", false);
    if (r.contains("responses")) {
      rule.responses = r.at("responses").get<std::vector<std::string>>();
    } else {
      rule.responses.push_back(r.value("response", std::string{}));
    }
    rule.statuses = r.value("statuses", std::vector<int>{});
    rule.latency_ms = r.value("latency_ms", 0.0);
    s.rules.push_back(std::move(rule));
  }
  s.by_query = j.value("by_query", std::map<std::string, std::string>{});
  s.default_response = j.value("default_response", std::string{});
  s.default_latency_ms = j.value("default_latency_ms", 0.0);
  s.latency_cycle_ms = j.value("latency_cycle_ms", std::vector<double>{});
  s.sleep = j.value("sleep", true);
  return s;
}

nlohmann::json to_json(const MockScript& s) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : s.rules) {
    nlohmann::json jr = {{"match", r.pattern}, {"regex", r.regex}, {"responses", r.responses}, {"latency_ms", r.latency_ms}};
    if (!r.statuses.empty()) jr["statuses"] = r.statuses;
    rules.push_back(std::move(jr));
  }
  return {{"rules", std::move(rules)},
          {"by_query", s.by_query},
          {"default_response", s.default_response},
          {"default_latency_ms", s.default_latency_ms},
          {"latency_cycle_ms", s.latency_cycle_ms},
          {"sleep", s.sleep}};
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script " + path.string());
  return mock_script_from_json(nlohmann::json::parse(in));
}

MockBackend::MockBackend(MockScript script, std::string name) : name_(std::move(name)), script_(std::move(script)) {
  for (const auto& r : script_.rules) {
    CompiledRule c{r, std::nullopt, 0};
    if (r.regex) c.re.emplace(r.pattern, std::regex::ECMAScript);
    rules_.push_back(std::move(c));
  }
}

BackendReply MockBackend::send(const ChatRequest& request) {
  ++calls_;
  const size_t now = ++in_flight_;
  for (size_t prev = max_in_flight_; now > prev && !max_in_flight_.compare_exchange_weak(prev, now);) {
  }

  const std::string prompt = request.rendered_prompt();
  BackendReply reply;
  reply.status = 200;
  double latency = script_.default_latency_ms;
  std::string tmpl = script_.default_response;
  std::smatch match;
  const std::smatch* match_ptr = nullptr;
  {
    std::lock_guard lock(mu_);
    bool ruled = false;
    for (auto& c : rules_) {
      bool hit = c.re ? std::regex_search(prompt, match, *c.re) : prompt.find(c.rule.pattern) != std::string::npos;
      if (!hit) continue;
      const size_t i = c.hits++;
      if (!c.rule.responses.empty()) tmpl = c.rule.responses[std::min(i, c.rule.responses.size() - 1)];
      if (i < c.rule.statuses.size()) reply.status = c.rule.statuses[i];
      latency = c.rule.latency_ms;
      if (c.re) match_ptr = &match;
      ruled = true;
      break;
    }
    if (!ruled && !script_.by_query.empty()) {
      if (auto it = script_.by_query.find(after_last_marker(prompt, "[Query]:")); it != script_.by_query.end())
        tmpl = it->second;
    }
    if (!script_.latency_cycle_ms.empty())
      latency = script_.latency_cycle_ms[cycle_pos_++ % script_.latency_cycle_ms.size()];
  }

  if (script_.sleep && latency > 0)
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(latency));
  reply.simulated_latency_ms = latency;
  if (reply.status >= 200 && reply.status < 300) {
    reply.text = splice_template(tmpl, prompt, match_ptr);
  } else {
    reply.error = "scripted HTTP " + std::to_string(reply.status);
  }
  --in_flight_;
  return reply;
}

}  // namespace mhke::llm
