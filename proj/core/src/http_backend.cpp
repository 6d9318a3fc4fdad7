#include "moa/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "moa/error.hpp"

namespace moa {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_argument, "base_url lacks a scheme: " + url, "base_url");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

nlohmann::json chat_request_body(const ModelSpec& model, const ChatRequest& request) {
  nlohmann::json body{{"model", model.api_model_name},
                      {"messages", request.messages},
                      {"temperature", request.params.temperature},
                      {"max_tokens", request.params.max_tokens}};
  if (request.params.seed) body["seed"] = *request.params.seed;
  return body;
}

BackendReply parse_chat_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    BackendReply reply;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    reply.content = content.is_null() ? std::string() : content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& usage = j["usage"];
      if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer()) {
        reply.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
      }
      if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
        reply.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
      }
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::api_error, std::string("malformed chat completion response: ") + e.what());
  }
}

BackendReply HttpBackend::send(const EndpointSpec& endpoint, const ModelSpec& model,
                               const ChatRequest& request) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto result = client.Post(url.path + "/chat/completions", headers,
                                  chat_request_body(model, request).dump(), "application/json");
  if (!result) {
    throw TransportError(0, "request to " + endpoint.base_url + " failed: " +
                                httplib::to_string(result.error()));
  }
  if (result->status != 200) throw TransportError(result->status, result->body);
  return parse_chat_response(result->body);
}

}  // namespace moa
