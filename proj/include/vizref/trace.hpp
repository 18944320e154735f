#pragma once

// Attention-trace and forged-sample data model plus their JSON codecs.
//
// A trace records, for selected response positions n (1-based), the
// head-averaged attention from that response token to every visual token for
// each recorded layer, and optionally the truncated next-token distributions
// with and without the visual tokens.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vizref/error.hpp"

namespace vizref {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Reserved token id for the bucket that absorbs truncated probability mass.
inline constexpr std::int64_t kOtherTokenId = -1;

/// Tolerance on probability-vector sums.
inline constexpr double kProbSumTolerance = 1e-6;

/// Half-open index range [start, end).
struct IndexSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t size() const { return end - start; }
  bool empty() const { return end == start; }
  bool overlaps(const IndexSpan& o) const {
    return !empty() && !o.empty() && start < o.end && o.start < end;
  }
  friend bool operator==(const IndexSpan&, const IndexSpan&) = default;
};

struct TokenPartition {
  IndexSpan visual_span;
  IndexSpan question_span;
  std::int64_t response_start = 0;
  std::int64_t response_len = 1;

  friend bool operator==(const TokenPartition&, const TokenPartition&) = default;
};

/// Two truncated next-token distributions aligned to a shared support. The
/// support is the union of each side's top-K ids plus the OTHER bucket.
struct DistributionPair {
  std::vector<std::int64_t> support_ids;
  std::vector<double> with_visual;
  std::vector<double> without_visual;

  friend bool operator==(const DistributionPair&, const DistributionPair&) = default;
};

struct AttentionStep {
  std::int64_t n = 1;
  // attn[layer][visual_token], heads pre-averaged.
  std::vector<std::vector<double>> attn;
  std::optional<DistributionPair> dist_pair;

  friend bool operator==(const AttentionStep&, const AttentionStep&) = default;
};

struct AttentionTrace {
  std::string sample_id;
  std::vector<std::int64_t> layer_ids;
  TokenPartition partition;
  std::vector<AttentionStep> steps;

  std::size_t num_layers_recorded() const { return layer_ids.size(); }

  /// Step recorded at response position n, or nullptr.
  const AttentionStep* find_step(std::int64_t n) const {
    auto it = std::lower_bound(
        steps.begin(), steps.end(), n,
        [](const AttentionStep& s, std::int64_t v) { return s.n < v; });
    return (it != steps.end() && it->n == n) ? &*it : nullptr;
  }

  /// Position of `layer_id` within layer_ids, or nullopt.
  std::optional<std::size_t> layer_index(std::int64_t layer_id) const {
    auto it = std::find(layer_ids.begin(), layer_ids.end(), layer_id);
    if (it == layer_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - layer_ids.begin());
  }

  friend bool operator==(const AttentionTrace&, const AttentionTrace&) = default;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline std::string at(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

}  // namespace detail

/// Checks a probability vector: finite, non-negative, sums to 1 within
/// kProbSumTolerance.
inline void validate_probabilities(std::span<const double> p, const std::string& field) {
  if (p.empty()) throw ValidationError(field, "empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0)
      throw ValidationError(detail::at(field, i), "probability must be finite and >= 0");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance)
    throw ValidationError(field, "probabilities sum to " + std::to_string(sum) +
                                     ", expected 1 within 1e-6");
}

inline void validate(const DistributionPair& d, const std::string& field = "dist_pair") {
  const auto k = d.support_ids.size();
  if (k == 0) throw ValidationError(field + ".support_ids", "empty support");
  if (d.with_visual.size() != k)
    throw ValidationError(field + ".with_visual", "length differs from support_ids");
  if (d.without_visual.size() != k)
    throw ValidationError(field + ".without_visual", "length differs from support_ids");
  std::set<std::int64_t> seen;
  std::size_t other = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = d.support_ids[i];
    if (!seen.insert(id).second)
      throw ValidationError(detail::at(field + ".support_ids", i), "duplicate token id");
    if (id == kOtherTokenId) ++other;
    else if (id < 0)
      throw ValidationError(detail::at(field + ".support_ids", i), "negative token id");
  }
  if (other != 1)
    throw ValidationError(field + ".support_ids", "OTHER bucket id must appear exactly once");
  validate_probabilities(d.with_visual, field + ".with_visual");
  validate_probabilities(d.without_visual, field + ".without_visual");
}

inline void validate(const TokenPartition& p) {
  auto span_ok = [](const IndexSpan& s, const char* name) {
    if (s.start < 0 || s.end < 0)
      throw ValidationError(std::string("partition.") + name, "negative index");
    if (s.end < s.start)
      throw ValidationError(std::string("partition.") + name, "start > end");
  };
  span_ok(p.visual_span, "visual_span");
  span_ok(p.question_span, "question_span");
  if (p.response_start < 0)
    throw ValidationError("partition.response_start", "negative index");
  if (p.response_len < 1)
    throw ValidationError("partition.response_len", "must be >= 1");
  if (p.visual_span.overlaps(p.question_span))
    throw ValidationError("partition", "visual_span and question_span overlap");
  if (p.visual_span.end > p.response_start)
    throw ValidationError("partition.visual_span", "must end at or before response_start");
  if (p.question_span.end > p.response_start)
    throw ValidationError("partition.question_span", "must end at or before response_start");
}

/// Throws ValidationError naming the first violated invariant.
inline void validate(const AttentionTrace& t) {
  if (t.layer_ids.empty()) throw ValidationError("layer_ids", "at least one layer required");
  for (std::size_t i = 0; i < t.layer_ids.size(); ++i) {
    if (t.layer_ids[i] < 0) throw ValidationError(detail::at("layer_ids", i), "negative layer id");
    if (i > 0 && t.layer_ids[i] <= t.layer_ids[i - 1])
      throw ValidationError("layer_ids", "layer_ids not strictly increasing");
  }
  validate(t.partition);
  const auto layers = t.layer_ids.size();
  const auto visual = static_cast<std::size_t>(t.partition.visual_span.size());
  for (std::size_t s = 0; s < t.steps.size(); ++s) {
    const auto& step = t.steps[s];
    const auto base = detail::at("steps", s);
    if (s > 0 && step.n <= t.steps[s - 1].n)
      throw ValidationError("steps", "steps not strictly increasing");
    if (step.n < 1 || step.n > t.partition.response_len)
      throw ValidationError(base + ".n", "n outside [1, response_len]");
    if (step.attn.size() != layers)
      throw ValidationError(base + ".attn", "expected one vector per recorded layer");
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& row = step.attn[l];
      if (row.size() != visual)
        throw ValidationError(detail::at(base + ".attn", l),
                              "length differs from |visual_span|");
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (!std::isfinite(row[j]) || row[j] < 0.0 || row[j] > 1.0)
          throw ValidationError(detail::at(detail::at(base + ".attn", l), j),
                                "weight out of [0,1]");
      }
    }
    if (step.dist_pair) validate(*step.dist_pair, base + ".dist_pair");
  }
}

// ---------------------------------------------------------------------------
// JSON codec

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ValidationError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError(path, "expected a string");
  return v.get<std::string>();
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array");
  return v;
}

inline std::vector<double> doubles(const json& v, const std::string& path) {
  std::vector<double> out;
  out.reserve(as_array(v, path).size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], at(path, i)));
  return out;
}

inline std::vector<std::int64_t> ints(const json& v, const std::string& path) {
  std::vector<std::int64_t> out;
  out.reserve(as_array(v, path).size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], at(path, i)));
  return out;
}

inline IndexSpan span_from(const json& v, const std::string& path) {
  auto xs = ints(v, path);
  if (xs.size() != 2) throw ValidationError(path, "expected [start, end]");
  return {xs[0], xs[1]};
}

}  // namespace detail

/// Decodes an already-parsed document. Validates every invariant.
inline AttentionTrace trace_from_json(const json& doc) {
  using namespace detail;
  AttentionTrace t;
  t.sample_id = as_string(require(doc, "sample_id", ""), "sample_id");
  t.layer_ids = ints(require(doc, "layer_ids", ""), "layer_ids");
  const auto& p = require(doc, "partition", "");
  t.partition.visual_span = span_from(require(p, "visual_span", "partition"), "partition.visual_span");
  t.partition.question_span =
      span_from(require(p, "question_span", "partition"), "partition.question_span");
  t.partition.response_start =
      as_int(require(p, "response_start", "partition"), "partition.response_start");
  t.partition.response_len = as_int(require(p, "response_len", "partition"), "partition.response_len");

  const auto& steps = as_array(require(doc, "steps", ""), "steps");
  t.steps.reserve(steps.size());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto base = at("steps", s);
    const auto& js = steps[s];
    AttentionStep step;
    step.n = as_int(require(js, "n", base), base + ".n");
    const auto& attn = as_array(require(js, "attn", base), base + ".attn");
    step.attn.reserve(attn.size());
    for (std::size_t l = 0; l < attn.size(); ++l)
      step.attn.push_back(doubles(attn[l], at(base + ".attn", l)));
    if (auto it = js.find("dist_pair"); it != js.end() && !it->is_null()) {
      const auto dbase = base + ".dist_pair";
      DistributionPair d;
      d.support_ids = ints(require(*it, "support_ids", dbase), dbase + ".support_ids");
      d.with_visual = doubles(require(*it, "with_visual", dbase), dbase + ".with_visual");
      d.without_visual = doubles(require(*it, "without_visual", dbase), dbase + ".without_visual");
      step.dist_pair = std::move(d);
    }
    t.steps.push_back(std::move(step));
  }
  validate(t);
  return t;
}

inline ordered_json trace_to_json(const AttentionTrace& t) {
  ordered_json doc;
  doc["sample_id"] = t.sample_id;
  doc["layer_ids"] = t.layer_ids;
  const auto& p = t.partition;
  doc["partition"] = {
      {"visual_span", {p.visual_span.start, p.visual_span.end}},
      {"question_span", {p.question_span.start, p.question_span.end}},
      {"response_start", p.response_start},
      {"response_len", p.response_len},
  };
  auto steps = ordered_json::array();
  for (const auto& s : t.steps) {
    ordered_json js;
    js["n"] = s.n;
    js["attn"] = s.attn;
    if (s.dist_pair) {
      js["dist_pair"] = {
          {"support_ids", s.dist_pair->support_ids},
          {"with_visual", s.dist_pair->with_visual},
          {"without_visual", s.dist_pair->without_visual},
      };
    } else {
      js["dist_pair"] = nullptr;
    }
    steps.push_back(std::move(js));
  }
  doc["steps"] = std::move(steps);
  return doc;
}

/// Parses JSON text into a validated trace. Throws ParseError (with byte
/// offset) or ValidationError.
inline AttentionTrace read_trace(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " +
                         e.what(),
                     e.byte);
  }
  return trace_from_json(doc);
}

inline AttentionTrace read_trace(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return read_trace(text);
}

/// Serializes a trace. Doubles use the shortest representation that reads
/// back to the same bits.
inline std::string write_trace(const AttentionTrace& t) {
  validate(t);
  return trace_to_json(t).dump();
}

// ---------------------------------------------------------------------------
// Forged reasoning samples

struct TranscriptMessage {
  std::string role;
  std::string text;
  friend bool operator==(const TranscriptMessage&, const TranscriptMessage&) = default;
};

struct Provenance {
  std::string llm_model;
  std::string vlm_model;
  std::string started_at;
  std::string finished_at;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ReasoningSample {
  std::string sample_id;
  std::string image_ref;
  std::string question;
  std::string reasoning;
  std::string final_answer;
  std::string ground_truth;
  int rounds = 0;
  std::vector<TranscriptMessage> transcript;
  Provenance provenance;
  friend bool operator==(const ReasoningSample&, const ReasoningSample&) = default;
};

inline ordered_json sample_to_json(const ReasoningSample& s) {
  auto transcript = ordered_json::array();
  for (const auto& m : s.transcript) transcript.push_back({{"role", m.role}, {"text", m.text}});
  return {
      {"sample_id", s.sample_id},
      {"image_ref", s.image_ref},
      {"question", s.question},
      {"reasoning", s.reasoning},
      {"final_answer", s.final_answer},
      {"ground_truth", s.ground_truth},
      {"rounds", s.rounds},
      {"transcript", std::move(transcript)},
      {"provenance",
       {{"llm_model", s.provenance.llm_model},
        {"vlm_model", s.provenance.vlm_model},
        {"started_at", s.provenance.started_at},
        {"finished_at", s.provenance.finished_at}}},
  };
}

inline ReasoningSample sample_from_json(const json& j) {
  using namespace detail;
  ReasoningSample s;
  s.sample_id = as_string(require(j, "sample_id", ""), "sample_id");
  s.image_ref = as_string(require(j, "image_ref", ""), "image_ref");
  s.question = as_string(require(j, "question", ""), "question");
  s.reasoning = as_string(require(j, "reasoning", ""), "reasoning");
  s.final_answer = as_string(require(j, "final_answer", ""), "final_answer");
  s.ground_truth = as_string(require(j, "ground_truth", ""), "ground_truth");
  s.rounds = static_cast<int>(as_int(require(j, "rounds", ""), "rounds"));
  const auto& tr = as_array(require(j, "transcript", ""), "transcript");
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto base = at("transcript", i);
    s.transcript.push_back({as_string(require(tr[i], "role", base), base + ".role"),
                            as_string(require(tr[i], "text", base), base + ".text")});
  }
  const auto& pv = require(j, "provenance", "");
  s.provenance.llm_model = as_string(require(pv, "llm_model", "provenance"), "provenance.llm_model");
  s.provenance.vlm_model = as_string(require(pv, "vlm_model", "provenance"), "provenance.vlm_model");
  s.provenance.started_at = as_string(require(pv, "started_at", "provenance"), "provenance.started_at");
  s.provenance.finished_at =
      as_string(require(pv, "finished_at", "provenance"), "provenance.finished_at");
  return s;
}

/// One JSON Lines record (no trailing newline).
inline std::string write_sample_line(const ReasoningSample& s) { return sample_to_json(s).dump(); }

inline std::vector<ReasoningSample> read_samples(std::istream& in) {
  std::vector<ReasoningSample> out;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const auto line_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed JSON line: " + std::string(e.what()), line_offset + e.byte);
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

}  // namespace vizref
