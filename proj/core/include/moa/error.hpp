#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moa {

enum class Errc {
  parse,
  reference,
  invariant,
  invalid_argument,
  exhausted_retries,
  api_error,
  scripted_miss,
  empty_responses,
  agent_failure,
  duplicate_identifier,
  unparseable_choice,
  missing_price,
  missing_params,
  length_mismatch,
  duplicate_id,
  no_done_samples,
  io,
};

std::string_view to_string(Errc code) noexcept;

/// Structured error carried by every failure in the library. `field` names the
/// offending config path, model id, or record index when one applies.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string field = {});

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

/// A single agent call failed inside a layer (after retries).
class AgentFailure : public Error {
 public:
  AgentFailure(std::string model, int layer_index, int agent_index, Errc cause,
               const std::string& detail);

  const std::string& model() const noexcept { return model_; }
  int layer_index() const noexcept { return layer_index_; }
  int agent_index() const noexcept { return agent_index_; }
  Errc cause() const noexcept { return cause_; }

 private:
  std::string model_;
  int layer_index_;
  int agent_index_;
  Errc cause_;
};

/// Transport-level failure of one attempt. status 0 means no HTTP response
/// (connection refused, timeout).
class TransportError : public std::runtime_error {
 public:
  TransportError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}

  int status() const noexcept { return status_; }
  bool retryable() const noexcept {
    return status_ == 0 || status_ == 429 || status_ >= 500;
  }

 private:
  int status_;
};

}  // namespace moa
