#pragma once

// Chat-completion gateway: a backend-agnostic client with retry, backoff and
// an in-flight request limit, an HTTP backend for OpenAI-compatible
// endpoints, and a scripted backend for offline runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vizref/error.hpp"

namespace vizref {

// Retryable failure (429, 5xx, timeout, connection loss). Never escapes
// ChatClient::complete; it is converted to TransportError once the budget
// runs out.
class TransientError : public Error {
 public:
  explicit TransientError(const std::string& what) : Error("TransientError", what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error("TransportError", what) {}
};

// Non-retryable 4xx; carries the server's message.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& what)
      : Error("RequestError", "HTTP " + std::to_string(status) + ": " + what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ScriptExhausted : public Error {
 public:
  explicit ScriptExhausted(const std::string& what) : Error("ScriptExhausted", what) {}
};

enum class Role { kSystem, kUser, kAssistant };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Role role = Role::kUser;
  std::string text;
  std::optional<std::string> image_ref;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 2048;

  void validate() const {
    if (messages.empty()) throw ValidationError("messages", "at least one message required");
    for (std::size_t i = 0; i < messages.size(); ++i)
      if (messages[i].image_ref && messages[i].role != Role::kUser)
        throw ValidationError("messages[" + std::to_string(i) + "]",
                              "image_ref only allowed on user messages");
    if (!(temperature >= 0.0)) throw ValidationError("temperature", "must be >= 0");
    if (max_tokens < 1) throw ValidationError("max_tokens", "must be positive");
  }
};

enum class FinishReason { kStop, kLength, kError };

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  Usage usage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptEntry {
  bool fail = false;
  std::string text;

  static ScriptEntry reply(std::string t) { return {false, std::move(t)}; }
  static ScriptEntry failure(std::string why = "scripted failure") { return {true, std::move(why)}; }
};

/// Parses a JSON array whose items are strings (replies) or
/// {"fail": "<reason>"} objects (transient failures).
inline std::vector<ScriptEntry> parse_script(const nlohmann::json& arr, const std::string& path = "script") {
  if (!arr.is_array()) throw ValidationError(path, "expected an array");
  std::vector<ScriptEntry> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    if (e.is_string()) {
      out.push_back(ScriptEntry::reply(e.get<std::string>()));
    } else if (e.is_object() && e.contains("fail")) {
      const auto& why = e["fail"];
      out.push_back(ScriptEntry::failure(why.is_string() ? why.get<std::string>() : "scripted failure"));
    } else {
      throw ValidationError(path + "[" + std::to_string(i) + "]", "expected a string or {\"fail\": ...}");
    }
  }
  return out;
}

/// Replays canned replies in order. Thread-safe; records every request.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> script) : script_(std::move(script)) {
    if (script_.empty()) throw ValidationError("script", "transcript must be non-empty");
  }

  ChatResponse send(const ChatRequest& request) override {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    if (next_ >= script_.size())
      throw ScriptExhausted("scripted transcript exhausted after " + std::to_string(script_.size()) +
                            " replies");
    const auto& e = script_[next_++];
    if (e.fail) throw TransientError(e.text);
    ChatResponse r;
    r.text = e.text;
    r.finish_reason = e.text.empty() ? FinishReason::kError : FinishReason::kStop;
    r.usage.completion_tokens = static_cast<std::int64_t>(e.text.size());
    return r;
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  std::size_t consumed() const {
    std::lock_guard lock(mu_);
    return next_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<ScriptEntry> script_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

// ---------------------------------------------------------------------------
// Client with retry

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30'000};
  // Each delay is scaled by (1 + jitter * u), u ~ U[0, 1).
  double jitter = 0.5;
  std::uint64_t seed = 0x5eed;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

inline Sleeper no_sleep() {
  return [](std::chrono::milliseconds) {};
}

class ChatClient {
 public:
  static constexpr std::ptrdiff_t kMaxConcurrency = 1024;

  ChatClient(std::shared_ptr<ChatBackend> backend, std::string model, RetryPolicy policy = {},
             Sleeper sleeper = real_sleeper(), int max_concurrency = 4)
      : backend_(std::move(backend)),
        model_(std::move(model)),
        policy_(policy),
        sleeper_(std::move(sleeper)),
        slots_(std::clamp<std::ptrdiff_t>(max_concurrency, 1, kMaxConcurrency)),
        rng_(policy.seed) {
    if (policy_.max_attempts < 1) throw ValidationError("retry.max_attempts", "must be >= 1");
  }

  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  const std::string& model() const { return model_; }
  ChatBackend& backend() { return *backend_; }

  /// Sends `request`, retrying transient failures with exponential backoff.
  ChatResponse complete(const ChatRequest& request) {
    request.validate();
    std::chrono::milliseconds previous{0};
    std::string last_error;
    for (int attempt = 1;; ++attempt) {
      try {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<kMaxConcurrency>& s;
          ~Release() { s.release(); }
        } release{slots_};
        return backend_->send(request);
      } catch (const TransientError& e) {
        last_error = e.what();
      }
      if (attempt >= policy_.max_attempts)
        throw TransportError("retry budget exhausted after " + std::to_string(attempt) +
                             " attempts: " + last_error);
      previous = std::max(previous, backoff(attempt));
      sleeper_(previous);
    }
  }

 private:
  std::chrono::milliseconds backoff(int attempt) {
    double u = 0.0;
    {
      std::lock_guard lock(rng_mu_);
      u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }
    const double base = static_cast<double>(policy_.base_delay.count()) *
                        std::pow(2.0, static_cast<double>(attempt - 1));
    const double d = std::min(static_cast<double>(policy_.max_delay.count()), base * (1.0 + policy_.jitter * u));
    return std::chrono::milliseconds(static_cast<std::int64_t>(d));
  }

  std::shared_ptr<ChatBackend> backend_;
  std::string model_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  std::counting_semaphore<kMaxConcurrency> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

/// Client over a scripted transcript. Retries do not sleep.
inline std::shared_ptr<ChatClient> mock_script(std::vector<ScriptEntry> transcript,
                                               std::string model = "mock", RetryPolicy policy = {}) {
  return std::make_shared<ChatClient>(std::make_shared<ScriptedBackend>(std::move(transcript)),
                                      std::move(model), policy, no_sleep());
}

inline std::shared_ptr<ChatClient> mock_script(const std::vector<std::string>& replies,
                                               std::string model = "mock", RetryPolicy policy = {}) {
  std::vector<ScriptEntry> entries;
  for (const auto& r : replies) entries.push_back(ScriptEntry::reply(r));
  return mock_script(std::move(entries), std::move(model), policy);
}

}  // namespace vizref
