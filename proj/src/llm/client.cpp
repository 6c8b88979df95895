#include "mhke/llm/client.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "mhke/hashing.hpp"
#include "mhke/parallel.hpp"

namespace mhke::llm {

bool RetryPolicy::retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

std::chrono::milliseconds RetryPolicy::backoff(int attempt, std::optional<std::chrono::milliseconds> retry_after) const {
  const double base = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, std::max(0, attempt - 1));
  auto delay = std::chrono::milliseconds(static_cast<long long>(std::min(base, static_cast<double>(max_backoff.count()))));
  if (retry_after) delay = std::max(delay, std::min(*retry_after, max_backoff));
  return delay;
}

RateLimiter::RateLimiter(double requests_per_minute)
    : interval_(requests_per_minute > 0
                    ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(60.0 / requests_per_minute))
                    : std::chrono::steady_clock::duration::zero()),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(next_, std::chrono::steady_clock::now());
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string cache_key(const std::string& backend_id, const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) messages.push_back({role_name(m.role), m.content});
  nlohmann::json j = {{"backend", backend_id},  {"model", req.model},           {"messages", messages},
                      {"temperature", req.temperature}, {"max_tokens", req.max_tokens}, {"tag", req.request_tag}};
  return sha256_hex(j.dump());
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::ifstream in(path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      try {
        auto j = nlohmann::json::parse(line);
        ChatResponse r;
        r.text = j.at("text").get<std::string>();
        r.latency_ms = j.value("latency_ms", 0.0);
        r.backend_id = j.value("backend_id", std::string{});
        if (j.contains("usage"))
          r.usage = Usage{j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0)};
        entries_[j.at("key").get<std::string>()] = std::move(r);
      } catch (const nlohmann::json::exception&) {
      }
    }
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw std::runtime_error("cannot open cache " + path_.string());
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const ChatResponse& r) {
  nlohmann::json j = {{"key", key}, {"text", r.text}, {"latency_ms", r.latency_ms}, {"backend_id", r.backend_id}};
  if (r.usage) j["usage"] = {{"prompt_tokens", r.usage->prompt_tokens}, {"completion_tokens", r.usage->completion_tokens}};
  std::lock_guard lock(mu_);
  if (!entries_.emplace(key, r).second) return;
  out_ << j.dump() << '\n';
  out_.flush();
}

size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ChatClient::ChatClient(std::shared_ptr<Backend> backend, RetryPolicy policy, std::shared_ptr<ResponseCache> cache,
                       std::shared_ptr<RateLimiter> limiter)
    : backend_(std::move(backend)),
      policy_(policy),
      cache_(std::move(cache)),
      limiter_(std::move(limiter)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!backend_) throw std::invalid_argument("chat client needs a backend");
}

ChatResponse ChatClient::complete(const ChatRequest& request) {
  request.validate();
  ++requests_;
  std::string key;
  if (cache_) {
    key = cache_key(backend_->id(), request);
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      hit->from_cache = true;
      hit->attempts = 0;
      return *hit;
    }
  }

  const int max_attempts = std::max(1, policy_.max_attempts);
  BackendReply reply;
  for (int attempt = 1;; ++attempt) {
    if (limiter_) limiter_->acquire();
    ++network_attempts_;
    const auto start = std::chrono::steady_clock::now();
    reply = backend_->send(request);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const bool ok_status = reply.status >= 200 && reply.status < 300;
    if (ok_status) {
      if (!reply.text)
        throw ProtocolError(reply.error.empty() ? "reply without text" : reply.error, reply.status, attempt);
      ChatResponse r;
      r.text = std::move(*reply.text);
      r.latency_ms = reply.simulated_latency_ms.value_or(wall_ms);
      r.usage = reply.usage;
      r.backend_id = backend_->id();
      r.attempts = attempt;
      if (cache_) cache_->put(key, r);
      return r;
    }
    if (!RetryPolicy::retryable(reply.status))
      throw HttpStatusError(fmt::format("non-retryable status {}: {}", reply.status, reply.error), reply.status,
                            attempt);
    if (attempt >= max_attempts)
      throw TransportError(fmt::format("giving up after {} attempts, last status {}: {}", attempt, reply.status,
                                       reply.error),
                           reply.status, attempt);
    ++retries_;
    sleeper_(policy_.backoff(attempt, reply.retry_after));
  }
}

std::vector<ChatResult> ChatClient::complete_batch(const std::vector<ChatRequest>& requests, size_t parallelism) {
  if (parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
  std::vector<ChatResult> out(requests.size());
  parallel_for(requests.size(), parallelism, [&](size_t i) {
    try {
      out[i].response = complete(requests[i]);
      out[i].status = 200;
    } catch (const LlmError& e) {
      out[i].error = e.what();
      out[i].status = e.status();
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

ClientStats ChatClient::stats() const {
  return {requests_.load(), network_attempts_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace mhke::llm
