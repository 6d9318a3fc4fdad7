#include <httplib.h>

#include "moa/error.hpp"
#include "moa/mock.hpp"

namespace moa {

struct MockServer::Impl {
  std::shared_ptr<MockBackend> backend;
  httplib::Server server;
};

namespace {

nlohmann::json error_body(std::string_view type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

MockServer::MockServer(std::shared_ptr<MockBackend> backend) : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  auto& server = impl_->server;
  MockBackend* mock = impl_->backend.get();

  server.Post(R"(.*/chat/completions)", [mock](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    std::string model;
    std::vector<ChatMessage> messages;
    GenerationParams params;
    try {
      body = nlohmann::json::parse(req.body);
      model = body.at("model").get<std::string>();
      messages = body.at("messages").get<std::vector<ChatMessage>>();
      params.temperature = body.value("temperature", params.temperature);
      params.max_tokens = body.value("max_tokens", params.max_tokens);
      if (body.contains("seed") && !body["seed"].is_null()) params.seed = body["seed"].get<std::int64_t>();
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(error_body("invalid_request_error", e.what()).dump(), "application/json");
      return;
    }
    try {
      const BackendReply reply = mock->serve("http", model, messages, params);
      nlohmann::json out{
          {"id", "mock-" + messages_digest(messages).substr(0, 16)},
          {"object", "chat.completion"},
          {"model", model},
          {"choices",
           {{{"index", 0},
             {"message", {{"role", "assistant"}, {"content", reply.content}}},
             {"finish_reason", "stop"}}}},
          {"usage",
           {{"prompt_tokens", *reply.prompt_tokens},
            {"completion_tokens", *reply.completion_tokens},
            {"total_tokens", *reply.prompt_tokens + *reply.completion_tokens}}}};
      res.set_content(out.dump(), "application/json");
    } catch (const TransportError& e) {
      res.status = e.status();
      res.set_content(error_body("mock_fault", e.what()).dump(), "application/json");
    } catch (const Error& e) {
      res.status = 404;
      res.set_content(error_body(to_string(e.code()), e.what()).dump(), "application/json");
    }
  });

  server.Get("/_mock/log", [mock](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& call : mock->log()) out.push_back(to_json(call));
    res.set_content(out.dump(), "application/json");
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  auto& server = impl_->server;
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io, "mock server cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return bound;
}

bool MockServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void MockServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace moa
