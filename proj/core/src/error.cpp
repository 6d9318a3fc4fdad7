#include "moa/error.hpp"

namespace moa {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse_error";
    case Errc::reference: return "reference_error";
    case Errc::invariant: return "invariant_error";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::exhausted_retries: return "exhausted_retries";
    case Errc::api_error: return "api_error";
    case Errc::scripted_miss: return "scripted_miss";
    case Errc::empty_responses: return "empty_responses";
    case Errc::agent_failure: return "agent_failure";
    case Errc::duplicate_identifier: return "duplicate_identifier";
    case Errc::unparseable_choice: return "unparseable_choice";
    case Errc::missing_price: return "missing_price";
    case Errc::missing_params: return "missing_params";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::no_done_samples: return "no_done_samples";
    case Errc::io: return "io_error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message, std::string field)
    : std::runtime_error(message), code_(code), field_(std::move(field)) {}

AgentFailure::AgentFailure(std::string model, int layer_index, int agent_index,
                           Errc cause, const std::string& detail)
    : Error(Errc::agent_failure,
            "layer " + std::to_string(layer_index) + " agent " +
                std::to_string(agent_index) + " (" + model + ") failed: " + detail,
            model),
      model_(std::move(model)),
      layer_index_(layer_index),
      agent_index_(agent_index),
      cause_(cause) {}

}  // namespace moa
