#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace moa {

enum class Role { system, user, assistant };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view text);  // throws Error(parse)

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Sampling parameters sent with every request of a layer.
struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct ChatRequest {
  std::string model;  // ModelSpec id
  std::vector<ChatMessage> messages;
  GenerationParams params;
};

struct ChatResponse {
  std::string content;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_ms = 0.0;
  int attempts = 1;
  bool estimated_usage = false;
};

/// Number of maximal non-whitespace runs in `text`.
std::size_t token_count(std::string_view text) noexcept;

/// Throws Error(invalid_argument) unless messages are non-empty, end with a
/// user turn, and only assistant turns are empty.
void validate_messages(const std::vector<ChatMessage>& messages);
void validate_params(const GenerationParams& params);

/// Stable digest of a message list (role + content, in order).
std::string messages_digest(const std::vector<ChatMessage>& messages);
/// Stable digest of model id, messages and sampling parameters.
std::string request_digest(const ChatRequest& request);

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const GenerationParams& p);
void from_json(const nlohmann::json& j, GenerationParams& p);

}  // namespace moa
