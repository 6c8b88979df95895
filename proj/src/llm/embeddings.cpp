#include "mhke/llm/embeddings.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <thread>

#include "mhke/llm/backend.hpp"
#include "mhke/llm/client.hpp"

namespace mhke::llm {

nlohmann::json embedding_request_json(const std::string& model, const std::vector<std::string>& input) {
  return {{"model", model}, {"input", input}};
}

std::vector<std::vector<float>> parse_embedding_response(const nlohmann::json& body, size_t expected) {
  const auto& data = body.at("data");
  if (!data.is_array() || data.size() != expected)
    throw ProtocolError(fmt::format("expected {} embeddings, got {}", expected, data.is_array() ? data.size() : 0), 200,
                        1);
  std::vector<std::vector<float>> out(expected);
  for (size_t i = 0; i < data.size(); ++i) {
    size_t slot = data[i].value("index", i);
    if (slot >= expected) throw ProtocolError("embedding index out of range", 200, 1);
    out[slot] = data[i].at("embedding").get<std::vector<float>>();
  }
  return out;
}

Embedder http_embedder(EmbeddingEndpoint ep) {
  return [ep](const std::vector<std::string>& input) {
    auto [origin, prefix] = split_base_url(ep.base_url);
    RetryPolicy policy;
    policy.max_attempts = ep.max_attempts;
    const std::string body = embedding_request_json(ep.model, input).dump();
    for (int attempt = 1;; ++attempt) {
      httplib::Client cli(origin);
      const auto secs = std::max<long>(1, static_cast<long>(std::chrono::duration_cast<std::chrono::seconds>(ep.timeout).count()));
      cli.set_connection_timeout(secs, 0);
      cli.set_read_timeout(secs, 0);
      httplib::Headers headers;
      if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
      auto res = cli.Post(prefix + "/embeddings", headers, body, "application/json");
      const int status = res ? res->status : 0;
      if (res && status >= 200 && status < 300) {
        try {
          return parse_embedding_response(nlohmann::json::parse(res->body), input.size());
        } catch (const nlohmann::json::exception& e) {
          throw ProtocolError(std::string("bad embeddings reply: ") + e.what(), status, attempt);
        }
      }
      if (!RetryPolicy::retryable(status))
        throw HttpStatusError(fmt::format("embeddings endpoint returned {}", status), status, attempt);
      if (attempt >= policy.max_attempts)
        throw TransportError(fmt::format("embeddings endpoint failed after {} attempts", attempt), status, attempt);
      std::this_thread::sleep_for(policy.backoff(attempt, std::nullopt));
    }
  };
}

}  // namespace mhke::llm
