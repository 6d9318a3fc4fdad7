#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "moa/client.hpp"

namespace moa {

enum class MockMode { echo, templated, table };

/// Injected failure: the next `times` calls to `model` fail with HTTP
/// `status` (times < 0 means always).
struct MockFault {
  std::string model;
  int status = 500;
  int times = -1;
};

/// Deterministic behaviour of the mock model backend.
///
/// - echo: reply with the last user message.
/// - templated: expand `template_text`; slots `{model}`, `{digest}` (request
///   digest over model, messages and params) and `{short}` (its first 12 hex
///   characters).
/// - table: look up (model id, messages digest); digest "*" matches any
///   request to that model. A miss is Error(scripted_miss).
struct MockScript {
  MockMode mode = MockMode::echo;
  std::string template_text = "{model}:{short}";
  std::map<std::pair<std::string, std::string>, std::string> entries;
  std::chrono::milliseconds latency{0};
  std::vector<MockFault> faults;

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct MockCall {
  std::uint64_t seq = 0;
  std::string endpoint;
  std::string model;
  std::vector<ChatMessage> messages;
  GenerationParams params;
  std::chrono::steady_clock::time_point started;
  std::chrono::steady_clock::time_point finished;
  int status = 200;
  std::string content;
};

nlohmann::json to_json(const MockCall& call);

/// In-process mock backend. Serves a MockScript, records every request in
/// arrival order and tracks peak in-flight requests per endpoint.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script);

  BackendReply send(const EndpointSpec& endpoint, const ModelSpec& model,
                    const ChatRequest& request) override;

  /// Transport-independent entry point shared with MockServer; `model` is the
  /// id the script is keyed by.
  BackendReply serve(const std::string& endpoint, const std::string& model,
                     const std::vector<ChatMessage>& messages, const GenerationParams& params);

  std::vector<MockCall> log() const;
  std::size_t calls() const;
  int peak_in_flight(const std::string& endpoint) const;
  void reset();

  const MockScript& script() const noexcept { return script_; }

 private:
  std::string respond(const std::string& model, const std::vector<ChatMessage>& messages,
                      const GenerationParams& params) const;

  MockScript script_;
  mutable std::mutex mu_;
  std::vector<MockCall> log_;
  std::map<std::string, int> fault_budget_;
  std::map<std::string, int> in_flight_;
  std::map<std::string, int> peak_;
  std::uint64_t next_seq_ = 0;
};

/// OpenAI-compatible HTTP front for a MockBackend: POST .../chat/completions,
/// GET /_mock/log. The wire `model` field is used as the script's model id.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<MockBackend> backend);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds (port 0 = ephemeral) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() from elsewhere.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace moa
