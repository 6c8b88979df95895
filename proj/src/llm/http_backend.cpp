#include <httplib.h>

#include <fmt/format.h>

#include "mhke/llm/backend.hpp"

namespace mhke::llm {

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("base url needs a scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::tie(origin_, path_prefix_) = split_base_url(config_.base_url);
}

BackendReply HttpBackend::send(const ChatRequest& request) {
  // httplib clients are not shareable across threads; one per call.
  httplib::Client cli(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  cli.set_connection_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
  cli.set_read_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
  cli.set_write_timeout(std::max<long>(1, static_cast<long>(secs)), 0);

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  for (const auto& [k, v] : config_.extra_headers) headers.emplace(k, v);

  BackendReply reply;
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, chat_request_json(request).dump(),
                      "application/json");
  if (!res) {
    reply.status = 0;
    reply.error = "transport: " + httplib::to_string(res.error());
    return reply;
  }
  reply.status = res->status;
  if (res->has_header("Retry-After")) {
    try {
      reply.retry_after = std::chrono::seconds(std::stol(res->get_header_value("Retry-After")));
    } catch (const std::exception&) {
    }
  }
  if (res->status < 200 || res->status >= 300) {
    reply.error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 512));
    return reply;
  }
  try {
    auto parsed = parse_chat_response(nlohmann::json::parse(res->body));
    reply.text = std::move(parsed.text);
    reply.usage = parsed.usage;
    if (!reply.text) reply.error = "response has no choices[0].message.content";
  } catch (const nlohmann::json::exception& e) {
    reply.error = std::string("response is not JSON: ") + e.what();
  }
  return reply;
}

}  // namespace mhke::llm
