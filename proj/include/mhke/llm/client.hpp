#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mhke/llm/backend.hpp"

namespace mhke::llm {

struct RetryPolicy {
  /// Total attempts including the first.
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};

  /// 408, 429, 5xx and transport failures (status 0).
  static bool retryable(int status);
  std::chrono::milliseconds backoff(int attempt, std::optional<std::chrono::milliseconds> retry_after) const;
};

/// Spaces request starts at least 60/requests_per_minute seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

/// Stable hash of everything that determines a reply.
std::string cache_key(const std::string& backend_id, const ChatRequest& request);

/// Append-only JSONL response store keyed by cache_key. Truncated trailing
/// lines (an interrupted run) are ignored on load.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  std::optional<ChatResponse> get(const std::string& key) const;
  void put(const std::string& key, const ChatResponse& response);
  size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ChatResponse> entries_;
  std::ofstream out_;
};

struct ClientStats {
  size_t requests = 0;
  size_t network_attempts = 0;
  size_t cache_hits = 0;
  size_t retries = 0;
};

/// Outcome of one request in a batch; exactly one of response/error is set.
struct ChatResult {
  std::optional<ChatResponse> response;
  std::string error;
  int status = 0;
};

class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ChatClient(std::shared_ptr<Backend> backend, RetryPolicy policy = {}, std::shared_ptr<ResponseCache> cache = nullptr,
             std::shared_ptr<RateLimiter> limiter = nullptr);

  /// Sends with retries. Throws TransportError once retries are exhausted,
  /// HttpStatusError on a non-retryable status and ProtocolError when a
  /// success reply carries no text.
  ChatResponse complete(const ChatRequest& request);

  /// Order-preserving; at most `parallelism` requests in flight. Failures
  /// are reported in position.
  std::vector<ChatResult> complete_batch(const std::vector<ChatRequest>& requests, size_t parallelism);

  ClientStats stats() const;
  const Backend& backend() const { return *backend_; }
  std::string backend_id() const { return backend_->id(); }
  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

 private:
  std::shared_ptr<Backend> backend_;
  RetryPolicy policy_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
  std::atomic<size_t> requests_{0};
  std::atomic<size_t> network_attempts_{0};
  std::atomic<size_t> cache_hits_{0};
  std::atomic<size_t> retries_{0};
};

}  // namespace mhke::llm
