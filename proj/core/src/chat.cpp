#include "moa/chat.hpp"

#include <cctype>
#include <cmath>

#include "moa/digest.hpp"
#include "moa/error.hpp"

namespace moa {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  throw Error(Errc::parse, "unknown chat role '" + std::string(text) + "'", "role");
}

std::size_t token_count(std::string_view text) noexcept {
  std::size_t runs = 0;
  bool in_run = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_run) ++runs;
    in_run = !space;
  }
  return runs;
}

void validate_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) {
    throw Error(Errc::invalid_argument, "chat request has no messages", "messages");
  }
  if (messages.back().role != Role::user) {
    throw Error(Errc::invalid_argument, "last chat message must have role user", "messages");
  }
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].content.empty() && messages[i].role != Role::assistant) {
      throw Error(Errc::invalid_argument,
                  "message " + std::to_string(i) + " is empty and not an assistant turn",
                  "messages[" + std::to_string(i) + "]");
    }
  }
}

void validate_params(const GenerationParams& params) {
  if (!std::isfinite(params.temperature) || params.temperature < 0.0) {
    throw Error(Errc::invariant, "temperature must be finite and >= 0", "temperature");
  }
  if (params.max_tokens < 1) {
    throw Error(Errc::invariant, "max_tokens must be >= 1", "max_tokens");
  }
}

std::string messages_digest(const std::vector<ChatMessage>& messages) {
  return json_digest(nlohmann::json(messages));
}

std::string request_digest(const ChatRequest& request) {
  nlohmann::json j;
  j["model"] = request.model;
  j["messages"] = request.messages;
  j["params"] = request.params;
  return json_digest(j);
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
  j = nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
  m.role = parse_role(j.at("role").get<std::string>());
  m.content = j.at("content").get<std::string>();
}

void to_json(nlohmann::json& j, const GenerationParams& p) {
  j = nlohmann::json{{"temperature", p.temperature}, {"max_tokens", p.max_tokens}};
  if (p.seed) j["seed"] = *p.seed;
}

void from_json(const nlohmann::json& j, GenerationParams& p) {
  p = GenerationParams{};
  if (j.contains("temperature")) p.temperature = j.at("temperature").get<double>();
  if (j.contains("max_tokens")) p.max_tokens = j.at("max_tokens").get<int>();
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
}

}  // namespace moa
