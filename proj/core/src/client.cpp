#include "moa/client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "moa/error.hpp"

namespace moa {

std::chrono::milliseconds RetryPolicy::ceiling(int retry) const {
  const double raw = static_cast<double>(base.count()) * std::pow(factor, std::max(0, retry - 1));
  const double capped = std::min(raw, static_cast<double>(cap.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

ModelClient::ModelClient(std::shared_ptr<const Config> config, std::shared_ptr<Backend> backend,
                         ClientOptions options)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      options_(std::move(options)),
      rng_(options_.jitter_seed) {
  for (const auto& e : config_->endpoints) gates_.emplace(e.id, std::make_unique<Gate>());
}

ModelClient::~ModelClient() = default;

std::chrono::steady_clock::time_point ModelClient::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

void ModelClient::acquire(const EndpointSpec& endpoint, Gate& gate) {
  using clock = std::chrono::steady_clock;
  std::unique_lock lock(gate.mu);
  for (;;) {
    gate.cv.wait(lock, [&] { return gate.in_flight < endpoint.max_concurrent; });
    if (!endpoint.requests_per_minute) break;
    const auto t = clock::now();
    while (!gate.window.empty() && gate.window.front() <= t - options_.rate_window) {
      gate.window.pop_front();
    }
    if (static_cast<int>(gate.window.size()) < *endpoint.requests_per_minute) {
      gate.window.push_back(t);
      break;
    }
    gate.cv.wait_until(lock, gate.window.front() + options_.rate_window);
  }
  ++gate.in_flight;
}

void ModelClient::release(Gate& gate) {
  {
    std::lock_guard lock(gate.mu);
    --gate.in_flight;
  }
  gate.cv.notify_all();
}

std::chrono::milliseconds ModelClient::jitter(int retry) {
  const auto ceiling = options_.retry.ceiling(retry);
  if (ceiling.count() <= 0) return std::chrono::milliseconds(0);
  std::lock_guard lock(rng_mu_);
  std::uniform_int_distribution<std::int64_t> dist(0, ceiling.count());
  return std::chrono::milliseconds(dist(rng_));
}

ChatResponse ModelClient::complete(const ChatRequest& request) {
  validate_messages(request.messages);
  validate_params(request.params);
  const ModelSpec& model = config_->model(request.model);
  const EndpointSpec& endpoint = config_->endpoint(model.endpoint);
  Gate& gate = *gates_.at(endpoint.id);

  const auto started = now();
  std::string last_error;
  for (int attempt = 1; attempt <= endpoint.max_retries + 1; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(jitter(attempt - 1));
    acquire(endpoint, gate);
    ++dispatched_;
    try {
      BackendReply reply = backend_->send(endpoint, model, request);
      release(gate);
      ChatResponse response;
      response.attempts = attempt;
      if (reply.prompt_tokens && reply.completion_tokens) {
        response.prompt_tokens = *reply.prompt_tokens;
        response.completion_tokens = *reply.completion_tokens;
      } else {
        std::int64_t prompt = 0;
        for (const auto& m : request.messages) prompt += static_cast<std::int64_t>(token_count(m.content));
        response.prompt_tokens = reply.prompt_tokens.value_or(prompt);
        response.completion_tokens =
            reply.completion_tokens.value_or(static_cast<std::int64_t>(token_count(reply.content)));
        response.estimated_usage = true;
      }
      response.content = std::move(reply.content);
      response.latency_ms =
          std::chrono::duration<double, std::milli>(now() - started).count();
      return response;
    } catch (const TransportError& e) {
      release(gate);
      if (!e.retryable()) {
        throw Error(Errc::api_error,
                    "model '" + model.id + "' returned HTTP " + std::to_string(e.status()) + ": " +
                        e.what(),
                    model.id);
      }
      last_error = e.status() == 0 ? std::string(e.what())
                                   : "HTTP " + std::to_string(e.status()) + ": " + e.what();
    } catch (...) {
      release(gate);
      throw;
    }
  }
  throw Error(Errc::exhausted_retries,
              "model '" + model.id + "' failed after " + std::to_string(endpoint.max_retries + 1) +
                  " attempts; last error: " + last_error,
              model.id);
}

}  // namespace moa
