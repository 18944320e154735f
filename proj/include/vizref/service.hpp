#pragma once

// Stateless HTTP exposure of the rollout reward:
//   POST /v1/reward  {"trace": {...}, "response": str, "answer": str,
//                     "lambda_v"?: float, "lambda_f"?: float}
//   GET  /healthz

#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "vizref/config.hpp"
#include "vizref/error.hpp"
#include "vizref/reward.hpp"
#include "vizref/trace.hpp"

namespace vizref {

struct HttpReply {
  int status = 200;
  std::string body;
};

inline std::string error_body(const Error& e) {
  nlohmann::ordered_json j{{"error", e.kind()}, {"detail", e.what()}};
  if (auto* v = dynamic_cast<const ValidationError*>(&e)) j["field"] = v->field();
  return j.dump();
}

/// Pure request handler: identical inputs always give identical replies.
inline HttpReply handle_reward_request(std::string_view body, const RewardConfig& defaults) {
  try {
    auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded()) return {400, error_body(ParseError("request body is not valid JSON", 0))};
    if (!j.is_object()) return {400, error_body(ValidationError("body", "expected a JSON object"))};

    auto string_field = [&](const char* key) {
      if (!j.contains(key)) throw ValidationError(key, "missing field");
      if (!j[key].is_string()) throw ValidationError(key, "expected a string");
      return j[key].get<std::string>();
    };
    auto number_field = [&](const char* key, double fallback) {
      if (!j.contains(key) || j[key].is_null()) return fallback;
      if (!j[key].is_number()) throw ValidationError(key, "expected a number");
      return j[key].get<double>();
    };

    if (!j.contains("trace")) throw ValidationError("trace", "missing field");
    if (!j["trace"].is_object()) throw ValidationError("trace", "expected a trace object");
    const auto response = string_field("response");
    const auto answer = string_field("answer");
    const double lambda_v = number_field("lambda_v", defaults.lambda_v);
    const double lambda_f = number_field("lambda_f", defaults.lambda_f);

    AttentionTrace trace;
    try {
      trace = trace_from_json(j["trace"]);
    } catch (const ValidationError& e) {
      throw ValidationError("trace." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
    const auto b = score_rollout(response, answer, trace, lambda_v, lambda_f, {defaults.r_v_cap});
    return {200, breakdown_to_json(b).dump()};
  } catch (const DegenerateAttention& e) {
    return {422, error_body(e)};
  } catch (const DegenerateHalf& e) {
    return {422, error_body(e)};
  } catch (const ValidationError& e) {
    return {400, error_body(e)};
  } catch (const ParseError& e) {
    return {400, error_body(e)};
  } catch (const std::exception& e) {
    return {500, nlohmann::ordered_json{{"error", "InternalError"}, {"detail", e.what()}}.dump()};
  }
}

class RewardServer {
 public:
  explicit RewardServer(RewardConfig defaults) : defaults_(defaults) {
    server_.Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
      const auto reply = handle_reward_request(req.body, defaults_);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"status\":\"ok\"}", "application/json");
    });
  }

  /// Blocks serving on host:port. Returns false if the port cannot be bound.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port; call listen_after_bind() (typically on another
  /// thread) to serve.
  int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  RewardConfig defaults_;
  httplib::Server server_;
};

}  // namespace vizref
