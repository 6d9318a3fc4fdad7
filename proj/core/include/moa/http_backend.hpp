#pragma once

#include "moa/client.hpp"

namespace moa {

/// OpenAI-compatible chat completions over HTTP(S):
/// POST {base_url}/chat/completions with a bearer token read from the
/// endpoint's api_key_env.
class HttpBackend : public Backend {
 public:
  BackendReply send(const EndpointSpec& endpoint, const ModelSpec& model,
                    const ChatRequest& request) override;
};

/// Request body sent on the wire (exposed for tests).
nlohmann::json chat_request_body(const ModelSpec& model, const ChatRequest& request);

/// Parses a chat.completion response body. Missing usage fields stay empty.
BackendReply parse_chat_response(const std::string& body);

}  // namespace moa
