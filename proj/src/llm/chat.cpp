#include "mhke/llm/chat.hpp"

namespace mhke::llm {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw std::invalid_argument("unknown role '" + std::string(name) + "'");
}

void ChatRequest::validate() const {
  if (messages.empty()) throw std::invalid_argument("chat request has no messages");
  for (const auto& m : messages) {
    if (m.role == Role::system) continue;
    if (m.role != Role::user) throw std::invalid_argument("first non-system message must be from the user");
    break;
  }
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

std::string ChatRequest::rendered_prompt() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

ChatRequest ChatRequest::user_prompt(std::string model, std::string prompt, double temperature, int max_tokens,
                                     std::string tag) {
  ChatRequest r;
  r.model = std::move(model);
  r.messages.push_back({Role::user, std::move(prompt)});
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  r.request_tag = std::move(tag);
  return r;
}

nlohmann::json chat_request_json(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return {{"model", req.model},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens},
          {"stream", false}};
}

ParsedChatBody parse_chat_response(const nlohmann::json& body) {
  ParsedChatBody out;
  if (!body.is_object()) return out;
  if (auto it = body.find("choices"); it != body.end() && it->is_array() && !it->empty()) {
    const auto& choice = it->front();
    if (choice.contains("message") && choice["message"].is_object()) {
      const auto& msg = choice["message"];
      if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
    } else if (choice.contains("text") && choice["text"].is_string()) {
      out.text = choice["text"].get<std::string>();
    }
  }
  if (auto it = body.find("usage"); it != body.end() && it->is_object()) {
    Usage u;
    u.prompt_tokens = it->value("prompt_tokens", 0);
    u.completion_tokens = it->value("completion_tokens", 0);
    out.usage = u;
  }
  return out;
}

}  // namespace mhke::llm
