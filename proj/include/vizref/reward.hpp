#pragma once

// Rule-based rollout rewards: accuracy, format, the
// visual-attention ratio reward, and their weighted sum.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vizref/error.hpp"
#include "vizref/metrics.hpp"
#include "vizref/trace.hpp"

namespace vizref {

inline constexpr double kDefaultLambdaV = 0.5;
inline constexpr double kDefaultLambdaF = 0.1;

struct RewardBreakdown {
  int r_a = 0;
  double r_v = 0.0;
  int r_f = 0;
  double lambda_v = kDefaultLambdaV;
  double lambda_f = kDefaultLambdaF;
  double r_o = 0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

inline ordered_json breakdown_to_json(const RewardBreakdown& b) {
  return {{"r_a", b.r_a}, {"r_v", b.r_v}, {"r_f", b.r_f},
          {"lambda_v", b.lambda_v}, {"lambda_f", b.lambda_f}, {"r_o", b.r_o}};
}

// ---------------------------------------------------------------------------
// Answer extraction and normalization

/// Contents of the last \boxed{...} span (brace-balanced), or nullopt.
inline std::optional<std::string> extract_last_boxed(std::string_view text) {
  static constexpr std::string_view kMarker = "\\boxed{";
  std::size_t pos = text.rfind(kMarker);
  while (pos != std::string_view::npos) {
    const auto open = pos + kMarker.size();
    int depth = 1;
    for (std::size_t i = open; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      else if (text[i] == '}' && --depth == 0) return std::string(text.substr(open, i - open));
    }
    // Unterminated: fall back to an earlier, complete span.
    if (pos == 0) break;
    pos = text.rfind(kMarker, pos - 1);
  }
  return std::nullopt;
}

/// Trim whitespace, ASCII case-fold, drop one trailing period.
inline std::string normalize_answer(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto trim = [&](std::string_view v) {
    while (!v.empty() && is_space(v.front())) v.remove_prefix(1);
    while (!v.empty() && is_space(v.back())) v.remove_suffix(1);
    return v;
  };
  auto v = trim(s);
  if (!v.empty() && v.back() == '.') v = trim(v.substr(0, v.size() - 1));
  std::string out(v);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool answers_match(std::string_view candidate, std::string_view ground_truth) {
  return normalize_answer(candidate) == normalize_answer(ground_truth);
}

inline int accuracy_reward(std::string_view response, std::string_view ground_truth) {
  if (normalize_answer(ground_truth).empty())
    throw ValidationError("answer", "ground truth must be non-empty");
  auto boxed = extract_last_boxed(response);
  if (!boxed) return 0;
  return answers_match(*boxed, ground_truth) ? 1 : 0;
}

/// 1 iff the response has exactly one <think>...</think> block, in order,
/// followed by text containing a \boxed{...} answer.
inline int format_reward(std::string_view response) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  auto count = [&](std::string_view needle) {
    std::size_t n = 0;
    for (auto p = response.find(needle); p != std::string_view::npos; p = response.find(needle, p + 1)) ++n;
    return n;
  };
  if (count(kOpen) != 1 || count(kClose) != 1) return 0;
  const auto open = response.find(kOpen);
  const auto close = response.find(kClose);
  if (close < open + kOpen.size()) return 0;
  return extract_last_boxed(response.substr(close + kClose.size())) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Visual-attention reward

struct VisualRewardOptions {
  // Ships disabled; r_v is unbounded unless a cap is configured.
  std::optional<double> cap;
};

/// Ratio of summed last-layer attention over the second half of the
/// response to that over the first half. Positions with 2n == response_len belong
/// to neither half. Returns 0 when r_a == 0.
inline double visual_attention_reward(const AttentionTrace& trace, int r_a,
                                      const VisualRewardOptions& opts = {}) {
  if (r_a != 0 && r_a != 1) throw ValidationError("r_a", "must be 0 or 1");
  if (r_a == 0) return 0.0;
  validate(trace);
  const std::size_t last[] = {trace.layer_ids.size() - 1};
  const auto len = trace.partition.response_len;
  double first = 0.0, second = 0.0;
  std::size_t first_steps = 0, second_steps = 0;
  for (const auto& step : trace.steps) {
    if (2 * step.n < len) {
      first += attn_visual(step, last);
      ++first_steps;
    } else if (2 * step.n > len) {
      second += attn_visual(step, last);
      ++second_steps;
    }
  }
  if (first_steps == 0 || second_steps == 0)
    throw DegenerateHalf("trace '" + trace.sample_id + "' has no recorded steps in the " +
                         (first_steps == 0 ? "first" : "second") + " half of the response");
  if (first == 0.0) throw DegenerateAttention("first-half attention sums to zero");
  double r_v = second / first;
  if (opts.cap) r_v = std::min(r_v, *opts.cap);
  return r_v;
}

inline RewardBreakdown overall_reward(int r_a, double r_v, int r_f, double lambda_v = kDefaultLambdaV,
                                      double lambda_f = kDefaultLambdaF) {
  if (r_a != 0 && r_a != 1) throw ValidationError("r_a", "must be 0 or 1");
  if (r_f != 0 && r_f != 1) throw ValidationError("r_f", "must be 0 or 1");
  if (!std::isfinite(r_v) || r_v < 0.0) throw ValidationError("r_v", "must be finite and >= 0");
  if (r_a == 0 && r_v != 0.0) throw ValidationError("r_v", "must be 0 when r_a == 0");
  if (!std::isfinite(lambda_v)) throw ValidationError("lambda_v", "must be finite");
  if (!std::isfinite(lambda_f)) throw ValidationError("lambda_f", "must be finite");
  RewardBreakdown b;
  b.r_a = r_a;
  b.r_v = r_v;
  b.r_f = r_f;
  b.lambda_v = lambda_v;
  b.lambda_f = lambda_f;
  b.r_o = static_cast<double>(r_a) + lambda_v * r_v + lambda_f * static_cast<double>(r_f);
  return b;
}

/// Full per-rollout scoring. Accuracy and format are evaluated
/// independently; the attention reward only runs for correct answers.
inline RewardBreakdown score_rollout(std::string_view response, std::string_view ground_truth,
                                     const AttentionTrace& trace, double lambda_v = kDefaultLambdaV,
                                     double lambda_f = kDefaultLambdaF,
                                     const VisualRewardOptions& opts = {}) {
  const int r_a = accuracy_reward(response, ground_truth);
  const int r_f = format_reward(response);
  const double r_v = visual_attention_reward(trace, r_a, opts);
  return overall_reward(r_a, r_v, r_f, lambda_v, lambda_f);
}

}  // namespace vizref
