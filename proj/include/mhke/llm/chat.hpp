#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mhke::llm {

enum class Role { system, user, assistant };

std::string_view role_name(Role r);
Role parse_role(std::string_view name);

struct Message {
  Role role = Role::user;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  /// Free-form label (record id, attempt number); part of the cache key.
  std::string request_tag;

  /// Throws std::invalid_argument unless messages are non-empty, the first
  /// non-system message is from the user, temperature >= 0 and max_tokens > 0.
  void validate() const;

  /// Message contents joined by blank lines; what mock matchers see.
  std::string rendered_prompt() const;

  static ChatRequest user_prompt(std::string model, std::string prompt, double temperature, int max_tokens,
                                 std::string tag = {});
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  double latency_ms = 0.0;
  std::optional<Usage> usage;
  std::string backend_id;
  int attempts = 0;
  bool from_cache = false;
};

class LlmError : public std::runtime_error {
 public:
  LlmError(const std::string& what, int status, int attempts)
      : std::runtime_error(what), status_(status), attempts_(attempts) {}
  /// Last HTTP status seen; 0 for transport failures.
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  int status_;
  int attempts_;
};

/// Retries exhausted on transient failures.
class TransportError : public LlmError {
  using LlmError::LlmError;
};

/// Non-retryable HTTP status (4xx other than 408/429).
class HttpStatusError : public LlmError {
  using LlmError::LlmError;
};

/// Well-formed reply without usable text.
class ProtocolError : public LlmError {
  using LlmError::LlmError;
};

/// Body of a standard chat-completions request.
nlohmann::json chat_request_json(const ChatRequest& req);

struct ParsedChatBody {
  std::optional<std::string> text;
  std::optional<Usage> usage;
};

/// Reads choices[0].message.content and usage from a chat-completions body.
ParsedChatBody parse_chat_response(const nlohmann::json& body);

}  // namespace mhke::llm
