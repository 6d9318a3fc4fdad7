#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moa/chat.hpp"

namespace moa {

/// Version tag of the embedded prompt texts; bump whenever a default changes.
inline constexpr std::string_view kPromptTemplatesVersion = "1";

/// Aggregate-and-Synthesize prompt. Filled, the system message reads
/// `preamble`, a blank line, `response_header`, then one numbered item per
/// line produced from `item_format` (`{index}` and `{content}` slots).
struct AggregationTemplate {
  std::string preamble;
  std::string response_header;
  std::string item_format;

  static AggregationTemplate standard();

  friend bool operator==(const AggregationTemplate&, const AggregationTemplate&) = default;
};

/// Where the aggregation block is placed relative to the original instruction.
enum class AggregatePlacement {
  system_message,  // [system: block, user: instruction]
  user_prefix,     // [user: block + "\n\n" + instruction]
};

std::string_view to_string(AggregatePlacement placement) noexcept;
AggregatePlacement parse_aggregate_placement(std::string_view text);

/// Ranking prompt used by the LLM-ranker baseline. `body` carries the
/// `{instruction}` and `{outputs}` slots; `outputs` is the `item_format`
/// expansion of each (identifier, output) pair joined by `item_separator`.
struct RankerTemplate {
  std::string body;
  std::string item_format;
  std::string item_separator;

  static RankerTemplate standard();
};

/// Single-pass slot substitution: every `{name}` whose name is a key in
/// `values` is replaced verbatim; anything else (including braces inside the
/// substituted values) is left untouched.
std::string fill_slots(std::string_view pattern,
                       const std::map<std::string, std::string, std::less<>>& values);

/// Text of the aggregation block (what goes into the system message).
std::string render_aggregation_block(const AggregationTemplate& tmpl,
                                     const std::vector<std::string>& responses);

/// Messages for an aggregating agent. Throws Error(empty_responses).
std::vector<ChatMessage> assemble_aggregate_messages(
    const AggregationTemplate& tmpl, std::string_view instruction,
    const std::vector<std::string>& responses,
    AggregatePlacement placement = AggregatePlacement::system_message);

/// Single user message for the ranker. Requires >= 2 outputs with unique
/// identifiers; throws Error(invalid_argument) / Error(duplicate_identifier).
std::vector<ChatMessage> assemble_ranker_messages(
    const RankerTemplate& tmpl, std::string_view instruction,
    const std::vector<std::pair<std::string, std::string>>& outputs);

}  // namespace moa
