#pragma once

// HTTP backend for OpenAI-compatible /chat/completions endpoints.

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "vizref/gateway.hpp"

namespace vizref {

enum class ImageEncoding { kUrl, kDataUri };

struct EndpointConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  ImageEncoding image_encoding = ImageEncoding::kUrl;
  int timeout_s = 120;
  int max_concurrency = 4;
};

namespace detail {

inline std::string base64_encode(std::string_view in) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const auto v = (static_cast<unsigned char>(in[i]) << 16) | (static_cast<unsigned char>(in[i + 1]) << 8) |
                   static_cast<unsigned char>(in[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < in.size()) {
    unsigned v = static_cast<unsigned char>(in[i]) << 16;
    if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += (i + 1 < in.size()) ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string mime_for(std::string_view path) {
  auto ends_with = [&](std::string_view ext) {
    if (path.size() < ext.size()) return false;
    auto tail = path.substr(path.size() - ext.size());
    for (std::size_t i = 0; i < ext.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(tail[i])) != ext[i]) return false;
    return true;
  };
  if (ends_with(".png")) return "image/png";
  if (ends_with(".jpg") || ends_with(".jpeg")) return "image/jpeg";
  if (ends_with(".gif")) return "image/gif";
  if (ends_with(".webp")) return "image/webp";
  return "application/octet-stream";
}

// {scheme://host[:port], /path/prefix}
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url lacks a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  auto path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

}  // namespace detail

/// Resolves an image reference to the string placed in image_url.url.
inline std::string encode_image(const std::string& image_ref, ImageEncoding encoding) {
  if (encoding == ImageEncoding::kUrl || image_ref.rfind("data:", 0) == 0 ||
      image_ref.rfind("http://", 0) == 0 || image_ref.rfind("https://", 0) == 0)
    return image_ref;
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) throw RequestError(0, "cannot read image '" + image_ref + "'");
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return "data:" + detail::mime_for(image_ref) + ";base64," + detail::base64_encode(bytes);
}

/// Request body in the OpenAI chat format. Message order is preserved.
inline nlohmann::ordered_json build_request_body(const ChatRequest& req, ImageEncoding encoding) {
  nlohmann::ordered_json body;
  body["model"] = req.model;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : req.messages) {
    nlohmann::ordered_json jm;
    jm["role"] = to_string(m.role);
    if (m.image_ref) {
      jm["content"] = nlohmann::ordered_json::array(
          {{{"type", "image_url"}, {"image_url", {{"url", encode_image(*m.image_ref, encoding)}}}},
           {{"type", "text"}, {"text", m.text}}});
    } else {
      jm["content"] = m.text;
    }
    messages.push_back(std::move(jm));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  return body;
}

/// Parses choices[0].message.content and friends.
inline ChatResponse parse_completion(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw TransientError(std::string("unparseable completion body: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
    throw TransientError("completion body has no choices");
  const auto& choice = j["choices"][0];
  ChatResponse r;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string())
    r.text = choice["message"]["content"].get<std::string>();
  const auto finish = choice.value("finish_reason", nlohmann::json("stop"));
  if (finish == "length") r.finish_reason = FinishReason::kLength;
  else if (finish == "stop") r.finish_reason = FinishReason::kStop;
  else r.finish_reason = FinishReason::kError;
  if (r.finish_reason == FinishReason::kStop && r.text.empty()) r.finish_reason = FinishReason::kError;
  if (j.contains("usage") && j["usage"].is_object()) {
    r.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
    r.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
  }
  return r;
}

class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    std::tie(origin_, prefix_) = detail::split_base_url(cfg_.base_url);
  }

  ChatResponse send(const ChatRequest& request) override {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(cfg_.timeout_s, 0);
    cli.set_read_timeout(cfg_.timeout_s, 0);
    cli.set_write_timeout(cfg_.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const auto body = build_request_body(request, cfg_.image_encoding).dump();
    auto res = cli.Post(prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) throw TransientError("HTTP transport failure: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
      throw TransientError("HTTP " + std::to_string(res->status) + ": " + res->body);
    if (res->status < 200 || res->status >= 300) throw RequestError(res->status, server_message(res->body));
    return parse_completion(res->body);
  }

 private:
  static std::string server_message(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.contains("error")) {
      const auto& e = j["error"];
      if (e.is_object() && e.contains("message") && e["message"].is_string())
        return e["message"].get<std::string>();
      if (e.is_string()) return e.get<std::string>();
    }
    return body;
  }

  EndpointConfig cfg_;
  std::string origin_;
  std::string prefix_;
};

inline std::shared_ptr<ChatClient> make_http_client(const EndpointConfig& cfg, RetryPolicy policy = {}) {
  return std::make_shared<ChatClient>(std::make_shared<HttpBackend>(cfg), cfg.model, policy, real_sleeper(),
                                      cfg.max_concurrency);
}

}  // namespace vizref
