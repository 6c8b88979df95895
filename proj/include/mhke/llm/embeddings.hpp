#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhke/scorer.hpp"

namespace mhke::llm {

struct EmbeddingEndpoint {
  /// POST {base_url}/embeddings
  std::string base_url;
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{120'000};
  int max_attempts = 5;
};

nlohmann::json embedding_request_json(const std::string& model, const std::vector<std::string>& input);

/// Reads data[i].embedding, honoring data[i].index when present.
std::vector<std::vector<float>> parse_embedding_response(const nlohmann::json& body, size_t expected);

/// Embedder calling an embeddings endpoint with {model, input} and reading
/// {data: [{embedding: [...]}]}. Retries transient failures with backoff.
Embedder http_embedder(EmbeddingEndpoint endpoint);

}  // namespace mhke::llm
