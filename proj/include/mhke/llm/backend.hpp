#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "mhke/llm/chat.hpp"

namespace mhke::llm {

/// One raw exchange with a backend, before retry policy is applied.
struct BackendReply {
  /// HTTP status; 0 when the request never produced a response.
  int status = 0;
  std::optional<std::string> text;
  std::optional<Usage> usage;
  std::string error;
  std::optional<std::chrono::milliseconds> retry_after;
  /// Mock backends report their scripted latency here.
  std::optional<double> simulated_latency_ms;
};

/// A chat endpoint. `send` must be safe to call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual BackendReply send(const ChatRequest& request) = 0;
};

struct HttpBackendConfig {
  /// e.g. "https://api.deepseek.com/v1" or "http://127.0.0.1:8000/v1".
  std::string base_url;
  std::string api_key;
  std::chrono::milliseconds timeout{120'000};
  std::map<std::string, std::string> extra_headers;
};

/// OpenAI-compatible POST {base_url}/chat/completions.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string id() const override { return "http:" + config_.base_url; }
  BackendReply send(const ChatRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string origin_;
  std::string path_prefix_;
};

/// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

struct MockRule {
  std::string pattern;
  bool regex = false;
  /// The i-th match of this rule answers with responses[min(i, size - 1)].
  std::vector<std::string> responses;
  /// HTTP status per match (same indexing); missing entries mean 200.
  std::vector<int> statuses;
  double latency_ms = 0.0;
};

/// Scripted replies for offline runs. First matching rule wins; then the
/// prompt's last "[Query]:" value is looked up in `by_query`; then the default.
///
/// Response templates may splice fields out of the rendered prompt:
///   {{answer}}               text after the last "[Answer]:" marker
///   {{query}}                text after the last "[Query]:" marker
///   {{updated_information}}  lines of the last "[Updated Information]:" block, space-joined
///   {{group:N}}              regex capture group N of the matching rule
struct MockScript {
  std::vector<MockRule> rules;
  std::map<std::string, std::string> by_query;
  std::string default_response;
  double default_latency_ms = 0.0;
  /// When non-empty, overrides every latency with this cycle (call order).
  std::vector<double> latency_cycle_ms;
  /// Sleep for the scripted latency; otherwise only report it.
  bool sleep = true;
};

MockScript mock_script_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockScript& script);
MockScript load_mock_script(const std::filesystem::path& path);

std::string splice_template(const std::string& tmpl, const std::string& prompt, const std::smatch* match);

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script, std::string name = "mock");
  std::string id() const override { return "mock:" + name_; }
  BackendReply send(const ChatRequest& request) override;

  size_t calls() const { return calls_; }
  size_t max_in_flight() const { return max_in_flight_; }

 private:
  struct CompiledRule {
    MockRule rule;
    std::optional<std::regex> re;
    size_t hits = 0;
  };

  std::string name_;
  MockScript script_;
  std::vector<CompiledRule> rules_;
  std::mutex mu_;
  size_t cycle_pos_ = 0;
  std::atomic<size_t> calls_{0};
  std::atomic<size_t> in_flight_{0};
  std::atomic<size_t> max_in_flight_{0};
};

}  // namespace mhke::llm
