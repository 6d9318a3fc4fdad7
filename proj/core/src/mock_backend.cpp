#include "moa/mock.hpp"

#include <fstream>

#include "moa/error.hpp"
#include "moa/prompts.hpp"

namespace moa {

MockScript MockScript::from_json(const nlohmann::json& j) {
  try {
    MockScript s;
    const std::string mode = j.value("mode", "echo");
    if (mode == "echo") {
      s.mode = MockMode::echo;
    } else if (mode == "template") {
      s.mode = MockMode::templated;
    } else if (mode == "table") {
      s.mode = MockMode::table;
    } else {
      throw Error(Errc::parse, "mock script mode must be echo, template or table", "mode");
    }
    s.template_text = j.value("template", s.template_text);
    s.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
    if (j.contains("entries")) {
      for (const auto& e : j.at("entries")) {
        s.entries[{e.at("model").get<std::string>(), e.value("digest", "*")}] =
            e.at("content").get<std::string>();
      }
    }
    if (j.contains("faults")) {
      for (const auto& f : j.at("faults")) {
        s.faults.push_back(
            {f.at("model").get<std::string>(), f.value("status", 500), f.value("times", -1)});
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed mock script: ") + e.what());
  }
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open mock script " + path.string(), path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed mock script: ") + e.what(), path.string());
  }
}

nlohmann::json MockScript::to_json() const {
  static constexpr const char* kModes[] = {"echo", "template", "table"};
  nlohmann::json j{{"mode", kModes[static_cast<int>(mode)]},
                   {"template", template_text},
                   {"latency_ms", latency.count()},
                   {"entries", nlohmann::json::array()},
                   {"faults", nlohmann::json::array()}};
  for (const auto& [key, content] : entries) {
    j["entries"].push_back({{"model", key.first}, {"digest", key.second}, {"content", content}});
  }
  for (const auto& f : faults) {
    j["faults"].push_back({{"model", f.model}, {"status", f.status}, {"times", f.times}});
  }
  return j;
}

nlohmann::json to_json(const MockCall& call) {
  using ms = std::chrono::duration<double, std::milli>;
  return {{"seq", call.seq},
          {"endpoint", call.endpoint},
          {"model", call.model},
          {"messages", call.messages},
          {"params", call.params},
          {"started_ms", ms(call.started.time_since_epoch()).count()},
          {"finished_ms", ms(call.finished.time_since_epoch()).count()},
          {"status", call.status},
          {"content", call.content}};
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  for (const auto& f : script_.faults) fault_budget_[f.model] = 0;
}

BackendReply MockBackend::send(const EndpointSpec& endpoint, const ModelSpec& model,
                               const ChatRequest& request) {
  return serve(endpoint.id, model.id, request.messages, request.params);
}

std::string MockBackend::respond(const std::string& model,
                                 const std::vector<ChatMessage>& messages,
                                 const GenerationParams& params) const {
  switch (script_.mode) {
    case MockMode::echo: {
      for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) return it->content;
      }
      return {};
    }
    case MockMode::templated: {
      const std::string digest = request_digest({model, messages, params});
      return fill_slots(script_.template_text,
                        {{"model", model}, {"digest", digest}, {"short", digest.substr(0, 12)}});
    }
    case MockMode::table: {
      const std::string digest = messages_digest(messages);
      if (auto it = script_.entries.find({model, digest}); it != script_.entries.end()) {
        return it->second;
      }
      if (auto it = script_.entries.find({model, "*"}); it != script_.entries.end()) {
        return it->second;
      }
      throw Error(Errc::scripted_miss,
                  "mock table has no entry for model '" + model + "' digest " + digest, model);
    }
  }
  return {};
}

BackendReply MockBackend::serve(const std::string& endpoint, const std::string& model,
                                const std::vector<ChatMessage>& messages,
                                const GenerationParams& params) {
  MockCall call;
  call.endpoint = endpoint;
  call.model = model;
  call.messages = messages;
  call.params = params;
  int fail_status = 0;
  {
    std::lock_guard lock(mu_);
    call.seq = next_seq_++;
    call.started = std::chrono::steady_clock::now();
    for (const auto& f : script_.faults) {
      if (f.model != model) continue;
      int& used = fault_budget_[model];
      if (f.times < 0 || used < f.times) {
        ++used;
        fail_status = f.status;
      }
      break;
    }
    const int now_in_flight = ++in_flight_[endpoint];
    peak_[endpoint] = std::max(peak_[endpoint], now_in_flight);
  }

  if (script_.latency.count() > 0) std::this_thread::sleep_for(script_.latency);

  std::string content;
  std::exception_ptr failure;
  if (fail_status == 0) {
    try {
      content = respond(model, messages, params);
    } catch (...) {
      failure = std::current_exception();
    }
  }

  {
    std::lock_guard lock(mu_);
    --in_flight_[endpoint];
    call.finished = std::chrono::steady_clock::now();
    call.status = fail_status != 0 ? fail_status : (failure ? 404 : 200);
    call.content = content;
    log_.push_back(call);
  }

  if (fail_status != 0) {
    throw TransportError(fail_status, "mock fault injected for model '" + model + "'");
  }
  if (failure) std::rethrow_exception(failure);

  std::int64_t prompt = 0;
  for (const auto& m : messages) prompt += static_cast<std::int64_t>(token_count(m.content));
  return {content, prompt, static_cast<std::int64_t>(token_count(content))};
}

std::vector<MockCall> MockBackend::log() const {
  std::lock_guard lock(mu_);
  auto sorted = log_;
  std::sort(sorted.begin(), sorted.end(),
            [](const MockCall& a, const MockCall& b) { return a.seq < b.seq; });
  return sorted;
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

int MockBackend::peak_in_flight(const std::string& endpoint) const {
  std::lock_guard lock(mu_);
  const auto it = peak_.find(endpoint);
  return it == peak_.end() ? 0 : it->second;
}

void MockBackend::reset() {
  std::lock_guard lock(mu_);
  log_.clear();
  peak_.clear();
  for (auto& [_, used] : fault_budget_) used = 0;
  next_seq_ = 0;
}

}  // namespace moa
