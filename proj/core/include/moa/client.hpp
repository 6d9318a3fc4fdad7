#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "moa/chat.hpp"
#include "moa/config.hpp"

namespace moa {

/// What a backend returns for one successful attempt. Usage is optional:
/// providers that omit it get a whitespace-token estimate.
struct BackendReply {
  std::string content;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

/// One transport attempt against a model. Implementations throw
/// TransportError for HTTP/network failures and Error for anything else.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply send(const EndpointSpec& endpoint, const ModelSpec& model,
                            const ChatRequest& request) = 0;
};

/// Exponential backoff with full jitter: attempt k (1-based retry number)
/// sleeps uniform(0, min(cap, base * factor^(k-1))).
struct RetryPolicy {
  std::chrono::milliseconds base{500};
  double factor = 2.0;
  std::chrono::milliseconds cap{30000};

  std::chrono::milliseconds ceiling(int retry) const;
};

struct ClientOptions {
  RetryPolicy retry;
  std::chrono::milliseconds rate_window{std::chrono::minutes(1)};
  std::uint64_t jitter_seed = 0x6d6f61;
  /// Latency clock; tests freeze it to make records byte-stable.
  std::function<std::chrono::steady_clock::time_point()> clock;
};

/// Chat-completion client shared by all pipeline executions. Enforces each
/// endpoint's max_concurrent and requests_per_minute across threads and
/// retries 429/5xx/timeouts.
class ModelClient {
 public:
  ModelClient(std::shared_ptr<const Config> config, std::shared_ptr<Backend> backend,
              ClientOptions options = {});
  ~ModelClient();

  ModelClient(const ModelClient&) = delete;
  ModelClient& operator=(const ModelClient&) = delete;

  ChatResponse complete(const ChatRequest& request);

  const Config& config() const noexcept { return *config_; }
  std::shared_ptr<const Config> shared_config() const noexcept { return config_; }
  /// Attempts handed to the backend so far (retries included).
  std::uint64_t dispatched() const noexcept { return dispatched_.load(); }

 private:
  struct Gate {
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
    std::deque<std::chrono::steady_clock::time_point> window;
  };

  void acquire(const EndpointSpec& endpoint, Gate& gate);
  static void release(Gate& gate);
  std::chrono::milliseconds jitter(int retry);
  std::chrono::steady_clock::time_point now() const;

  std::shared_ptr<const Config> config_;
  std::shared_ptr<Backend> backend_;
  ClientOptions options_;
  std::map<std::string, std::unique_ptr<Gate>, std::less<>> gates_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  std::atomic<std::uint64_t> dispatched_{0};
};

}  // namespace moa
