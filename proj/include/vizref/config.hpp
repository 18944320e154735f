#pragma once

// Application configuration: a TOML-style document of [section] blocks with
// `key = value` lines (strings in double quotes, numbers, true/false, '#'
// comments). Credentials never live here; they come from the environment.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vizref/error.hpp"
#include "vizref/forge.hpp"
#include "vizref/http_gateway.hpp"
#include "vizref/metrics.hpp"
#include "vizref/reward.hpp"

namespace vizref {

inline constexpr const char* kLlmKeyEnv = "REFLECT_LLM_API_KEY";
inline constexpr const char* kVlmKeyEnv = "REFLECT_VLM_API_KEY";

struct RewardConfig {
  double lambda_v = kDefaultLambdaV;
  double lambda_f = kDefaultLambdaF;
  std::optional<double> r_v_cap;
};

struct AnalyzeConfig {
  std::int64_t bucket_size = 25;
  std::size_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
};

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
};

struct AppConfig {
  EndpointConfig llm{"http://localhost:8000/v1", "llm", "", ImageEncoding::kUrl, 120, 4};
  EndpointConfig vlm{"http://localhost:8001/v1", "vlm", "", ImageEncoding::kUrl, 120, 4};
  RetryPolicy retry;
  ForgeConfig forge;
  RewardConfig reward;
  AnalyzeConfig analyze;
  ServiceConfig service;

  void validate() const {
    if (!std::isfinite(reward.lambda_v) || !std::isfinite(reward.lambda_f))
      throw ConfigError("reward coefficients must be finite");
    if (reward.r_v_cap && !(*reward.r_v_cap > 0.0)) throw ConfigError("reward.r_v_cap must be > 0");
    if (service.port < 1 || service.port > 65535) throw ConfigError("service.port must lie in [1, 65535]");
    if (analyze.bucket_size < 1) throw ConfigError("analyze.bucket_size must be >= 1");
    if (!(analyze.ci_level > 0.0 && analyze.ci_level < 1.0)) throw ConfigError("analyze.ci_level must lie in (0, 1)");
    if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
    forge.validate();
  }
};

namespace detail {

using ConfigValue = std::variant<std::string, double, bool>;

inline std::map<std::string, std::pair<ConfigValue, int>> parse_kv(std::string_view text) {
  std::map<std::string, std::pair<ConfigValue, int>> out;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    auto fail = [&](const std::string& why) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + why);
    };

    // Strip comments outside of quoted strings.
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    auto l = trim(line);
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(l).substr(1, l.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const auto key = trim(std::string_view(l).substr(0, eq));
    const auto raw = trim(std::string_view(l).substr(eq + 1));
    if (key.empty() || raw.empty()) fail("expected key = value");
    const auto full = section.empty() ? key : section + "." + key;
    if (out.count(full)) fail("duplicate key '" + full + "'");

    ConfigValue value;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') fail("unterminated string");
      std::string s;
      for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 2 < raw.size()) {
          const char c = raw[++i];
          s += c == 'n' ? '\n' : c == 't' ? '\t' : c;
        } else {
          s += raw[i];
        }
      }
      value = s;
    } else if (raw == "true" || raw == "false") {
      value = raw == "true";
    } else {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) fail("bad value '" + raw + "'");
      value = d;
    }
    out.emplace(full, std::make_pair(std::move(value), lineno));
  }
  return out;
}

}  // namespace detail

inline AppConfig parse_config(std::string_view text) {
  auto kv = detail::parse_kv(text);
  AppConfig cfg;

  auto take = [&](const std::string& key) -> std::optional<detail::ConfigValue> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second.first;
    kv.erase(it);
    return v;
  };
  auto str = [&](const std::string& key, std::string& dst) {
    if (auto v = take(key)) {
      if (!std::holds_alternative<std::string>(*v)) throw ConfigError(key + " must be a string");
      dst = std::get<std::string>(*v);
    }
  };
  auto num = [&](const std::string& key, auto& dst) {
    if (auto v = take(key)) {
      if (!std::holds_alternative<double>(*v)) throw ConfigError(key + " must be a number");
      const double d = std::get<double>(*v);
      using T = std::decay_t<decltype(dst)>;
      if constexpr (std::is_integral_v<T>) {
        if (d != std::floor(d)) throw ConfigError(key + " must be an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (d < 0) throw ConfigError(key + " must be non-negative");
      }
      dst = static_cast<T>(d);
    }
  };
  auto flag = [&](const std::string& key, bool& dst) {
    if (auto v = take(key)) {
      if (!std::holds_alternative<bool>(*v)) throw ConfigError(key + " must be true or false");
      dst = std::get<bool>(*v);
    }
  };
  auto endpoint = [&](const std::string& sec, EndpointConfig& ep) {
    str(sec + ".base_url", ep.base_url);
    str(sec + ".model", ep.model);
    std::string enc;
    str(sec + ".image_encoding", enc);
    if (enc == "url") ep.image_encoding = ImageEncoding::kUrl;
    else if (enc == "data_uri") ep.image_encoding = ImageEncoding::kDataUri;
    else if (!enc.empty()) throw ConfigError(sec + ".image_encoding must be 'url' or 'data_uri'");
    num(sec + ".timeout_s", ep.timeout_s);
    num(sec + ".max_concurrency", ep.max_concurrency);
    if (ep.max_concurrency < 1) throw ConfigError(sec + ".max_concurrency must be >= 1");
    if (kv.count(sec + ".api_key")) throw ConfigError(sec + ".api_key is not allowed; use the environment");
  };

  endpoint("llm", cfg.llm);
  endpoint("vlm", cfg.vlm);

  int retry_attempts = cfg.retry.max_attempts;
  std::int64_t base_ms = cfg.retry.base_delay.count(), max_ms = cfg.retry.max_delay.count();
  num("retry.max_attempts", retry_attempts);
  num("retry.base_delay_ms", base_ms);
  num("retry.max_delay_ms", max_ms);
  num("retry.jitter", cfg.retry.jitter);
  cfg.retry.max_attempts = retry_attempts;
  cfg.retry.base_delay = std::chrono::milliseconds(base_ms);
  cfg.retry.max_delay = std::chrono::milliseconds(max_ms);

  num("forge.max_rounds", cfg.forge.max_rounds);
  str("forge.answer_match", cfg.forge.answer_match);
  num("forge.temperature_requester", cfg.forge.temperatures.requester);
  num("forge.temperature_responder", cfg.forge.temperatures.responder);
  num("forge.temperature_summarizer", cfg.forge.temperatures.summarizer);
  num("forge.temperature_cohesion", cfg.forge.temperatures.cohesion);
  num("forge.max_tokens", cfg.forge.max_tokens);
  str("forge.output", cfg.forge.output_path);
  num("forge.concurrency", cfg.forge.concurrency);
  flag("forge.strict_cohesion", cfg.forge.strict_cohesion);

  num("reward.lambda_v", cfg.reward.lambda_v);
  num("reward.lambda_f", cfg.reward.lambda_f);
  double cap = 0.0;
  if (kv.count("reward.r_v_cap")) {
    num("reward.r_v_cap", cap);
    cfg.reward.r_v_cap = cap;
  }

  num("analyze.bucket_size", cfg.analyze.bucket_size);
  num("analyze.bootstrap_resamples", cfg.analyze.bootstrap_resamples);
  num("analyze.ci_level", cfg.analyze.ci_level);
  num("analyze.seed", cfg.analyze.seed);

  str("service.host", cfg.service.host);
  num("service.port", cfg.service.port);

  if (!kv.empty()) {
    const auto& [key, v] = *kv.begin();
    throw ConfigError("config line " + std::to_string(v.second) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text);
}

/// Fills API keys from REFLECT_LLM_API_KEY / REFLECT_VLM_API_KEY.
inline void resolve_credentials(AppConfig& cfg) {
  auto get = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    if (!v || !*v) throw ConfigError(std::string("environment variable ") + name + " is not set");
    return v;
  };
  cfg.llm.api_key = get(kLlmKeyEnv);
  cfg.vlm.api_key = get(kVlmKeyEnv);
}

}  // namespace vizref
