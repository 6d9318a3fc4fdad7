#include "moa/prompts.hpp"

#include <set>

#include "moa/error.hpp"

namespace moa {
namespace {

constexpr std::string_view kAggregatePreamble =
    "You have been provided with a set of responses from various open-source models to the "
    "latest user query. Your task is to synthesize these responses into a single, high-quality "
    "response. It is crucial to critically evaluate the information provided in these responses, "
    "recognizing that some of it may be biased or incorrect. Your response should not simply "
    "replicate the given answers but should offer a refined, accurate, and comprehensive reply "
    "to the instruction. Ensure your response is well-structured, coherent, and adheres to the "
    "highest standards of accuracy and reliability.";

constexpr std::string_view kRankerBody =
    "You are a highly efficient assistant, who evaluates and selects the best large language "
    "model (LLMs) based on the quality of their responses to a given instruction. This process "
    "will be used to create a leaderboard reflecting the most accurate and human-preferred "
    "answers.\n"
    "I require a leaderboard for various large language models. I'll provide you with prompts "
    "given to these models and their corresponding outputs. Your task is to assess these "
    "responses, and select the model that produces the best output from a human perspective.\n"
    "\n"
    "## Instruction\n"
    "\n"
    "{\n"
    "    \"instruction\": \"\"\"{instruction}\"\"\",\n"
    "}\n"
    "\n"
    "## Model Outputs\n"
    "\n"
    "Here are the unordered outputs from the models. Each output is associated with a specific "
    "model, identified by a unique model identifier.\n"
    "\n"
    "{\n"
    "{outputs}\n"
    "}\n"
    "\n"
    "## Task\n"
    "\n"
    "Evaluate the models based on the quality and relevance of their outputs, and select the "
    "model that generated the best output. Answer by providing the model identifier of the best "
    "model. We will use your output as the name of the best model, so make sure your output only "
    "contains one of the following model identifiers and nothing else (no quotes, no spaces, no "
    "new lines, ...).\n"
    "\n"
    "## Best Model Identifier";

constexpr std::string_view kRankerItem =
    "    {\n"
    "        \"model_identifier\": \"{identifier}\",\n"
    "        \"output\": \"\"\"{output}\"\"\"\n"
    "    }";

bool is_slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

AggregationTemplate AggregationTemplate::standard() {
  return {std::string(kAggregatePreamble), "Responses from models:", "{index}. {content}"};
}

RankerTemplate RankerTemplate::standard() {
  return {std::string(kRankerBody), std::string(kRankerItem), ",\n"};
}

std::string_view to_string(AggregatePlacement placement) noexcept {
  return placement == AggregatePlacement::system_message ? "system" : "user";
}

AggregatePlacement parse_aggregate_placement(std::string_view text) {
  if (text == "system") return AggregatePlacement::system_message;
  if (text == "user") return AggregatePlacement::user_prefix;
  throw Error(Errc::parse, "aggregate_role must be 'system' or 'user'", "aggregate_role");
}

std::string fill_slots(std::string_view pattern,
                       const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(pattern.size());
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      std::size_t j = i + 1;
      while (j < pattern.size() && is_slot_char(pattern[j])) ++j;
      if (j < pattern.size() && j > i + 1 && pattern[j] == '}') {
        const auto it = values.find(pattern.substr(i + 1, j - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(pattern[i++]);
  }
  return out;
}

std::string render_aggregation_block(const AggregationTemplate& tmpl,
                                     const std::vector<std::string>& responses) {
  std::string block = tmpl.preamble;
  block += "\n\n";
  block += tmpl.response_header;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    block.push_back('\n');
    block += fill_slots(tmpl.item_format,
                        {{"index", std::to_string(i + 1)}, {"content", responses[i]}});
  }
  return block;
}

std::vector<ChatMessage> assemble_aggregate_messages(const AggregationTemplate& tmpl,
                                                     std::string_view instruction,
                                                     const std::vector<std::string>& responses,
                                                     AggregatePlacement placement) {
  if (responses.empty()) {
    throw Error(Errc::empty_responses, "aggregation requires at least one response");
  }
  std::string block = render_aggregation_block(tmpl, responses);
  if (placement == AggregatePlacement::user_prefix) {
    block += "\n\n";
    block += instruction;
    return {{Role::user, std::move(block)}};
  }
  return {{Role::system, std::move(block)}, {Role::user, std::string(instruction)}};
}

std::vector<ChatMessage> assemble_ranker_messages(
    const RankerTemplate& tmpl, std::string_view instruction,
    const std::vector<std::pair<std::string, std::string>>& outputs) {
  if (outputs.size() < 2) {
    throw Error(Errc::invalid_argument, "ranking needs at least two outputs", "outputs");
  }
  std::set<std::string_view> seen;
  std::string items;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& [identifier, output] = outputs[i];
    if (!seen.insert(identifier).second) {
      throw Error(Errc::duplicate_identifier, "duplicate model identifier '" + identifier + "'",
                  identifier);
    }
    if (i > 0) items += tmpl.item_separator;
    items += fill_slots(tmpl.item_format, {{"identifier", identifier}, {"output", output}});
  }
  return {{Role::user,
           fill_slots(tmpl.body, {{"instruction", std::string(instruction)}, {"outputs", items}})}};
}

}  // namespace moa
