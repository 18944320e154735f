#pragma once

// Seeded generator for attention traces with a known closed-form profile.
// Every visual weight at position n equals profile.value(n) (before optional
// multiplicative noise), so the per-step attention metric reproduces the
// profile exactly, and each distribution pair is built to have Hellinger
// distance profile.value(n).

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vizref/error.hpp"
#include "vizref/trace.hpp"

namespace vizref {

struct DecayProfile {
  enum class Kind { kConstant, kExponential, kReflective };

  Kind kind = Kind::kConstant;
  double initial = 0.4;
  double rate = 0.0;
  std::vector<std::int64_t> spike_positions;
  double spike_height = 0.0;

  static DecayProfile constant(double level) { return {Kind::kConstant, level, 0.0, {}, 0.0}; }

  static DecayProfile exponential(double initial, double rate) {
    return {Kind::kExponential, initial, rate, {}, 0.0};
  }

  /// Exponential decay reaching `ratio * initial` at position `at_n`.
  static DecayProfile exponential_to(double initial, double ratio, std::int64_t at_n) {
    if (!(ratio > 0.0 && ratio <= 1.0) || at_n < 2)
      throw GenerationError("exponential target needs ratio in (0,1] and position >= 2");
    return exponential(initial, -std::log(ratio) / static_cast<double>(at_n - 1));
  }

  /// Exponential decay with attention re-surging to `height` at `spikes`.
  static DecayProfile reflective(double initial, double rate, std::vector<std::int64_t> spikes,
                                 double height) {
    return {Kind::kReflective, initial, rate, std::move(spikes), height};
  }

  bool is_spike(std::int64_t n) const {
    if (kind != Kind::kReflective) return false;
    for (auto s : spike_positions)
      if (s == n) return true;
    return false;
  }

  double value(std::int64_t n) const {
    if (is_spike(n)) return spike_height;
    if (kind == Kind::kConstant) return initial;
    return initial * std::exp(-rate * static_cast<double>(n - 1));
  }

  void check() const {
    if (!(initial > 0.0 && initial <= 1.0)) throw GenerationError("initial must lie in (0, 1]");
    if (!std::isfinite(rate) || rate < 0.0) throw GenerationError("rate must be finite and >= 0");
    if (kind == Kind::kReflective) {
      if (!(spike_height > 0.0 && spike_height <= 1.0))
        throw GenerationError("spike height must lie in (0, 1]");
      for (auto s : spike_positions)
        if (s < 1) throw GenerationError("spike positions are 1-based");
    }
  }
};

inline const char* to_string(DecayProfile::Kind k) {
  switch (k) {
    case DecayProfile::Kind::kConstant: return "constant";
    case DecayProfile::Kind::kExponential: return "exponential";
    case DecayProfile::Kind::kReflective: return "reflective";
  }
  return "?";
}

struct TraceShape {
  std::int64_t response_len = 300;
  std::int64_t num_layers = 2;
  std::int64_t num_visual_tokens = 8;
  std::int64_t question_len = 16;
  // Multiplicative noise amplitude in [0, 1); 0 keeps the oracle exact.
  double noise = 0.0;
  bool with_distributions = true;
  std::int64_t vocab_size = 151'643;
};

struct SynthMeta {
  double noise = 0.0;
  std::size_t clamp_events = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// [0, 1) with 53 random bits; portable across standard libraries.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::int64_t bounded(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

}  // namespace detail

/// Two-token-plus-OTHER distribution pair whose Hellinger distance is
/// exactly `h` in exact arithmetic.
inline DistributionPair distribution_with_distance(double h, std::int64_t token_a, std::int64_t token_b) {
  if (!(h >= 0.0 && h <= 1.0)) throw GenerationError("target Hellinger distance outside [0, 1]");
  const double h2 = h * h;
  const double other = 0.05 * (1.0 - h2);
  const double sqrt_c = 1.0 - h2 / (1.0 - other);
  const double c = sqrt_c * sqrt_c;
  DistributionPair d;
  d.support_ids = {token_a, token_b, kOtherTokenId};
  d.with_visual = {1.0 - other, 0.0, other};
  d.without_visual = {(1.0 - other) * c, (1.0 - other) * (1.0 - c), other};
  return d;
}

inline AttentionTrace generate_trace(const DecayProfile& profile, const TraceShape& shape,
                                     std::uint64_t seed, SynthMeta* meta = nullptr) {
  profile.check();
  if (shape.response_len < 1 || shape.num_layers < 1 || shape.num_visual_tokens < 1 ||
      shape.question_len < 0)
    throw GenerationError("trace dimensions must be positive");
  if (!(shape.noise >= 0.0 && shape.noise < 1.0)) throw GenerationError("noise must lie in [0, 1)");
  if (shape.vocab_size < 2) throw GenerationError("vocab_size must be >= 2");

  std::mt19937_64 rng(seed);
  AttentionTrace t;
  t.sample_id = "synth-" + std::to_string(seed);
  for (std::int64_t l = 0; l < shape.num_layers; ++l) t.layer_ids.push_back(l);
  t.partition.visual_span = {0, shape.num_visual_tokens};
  t.partition.question_span = {shape.num_visual_tokens, shape.num_visual_tokens + shape.question_len};
  t.partition.response_start = t.partition.question_span.end;
  t.partition.response_len = shape.response_len;

  SynthMeta m;
  m.noise = shape.noise;
  t.steps.reserve(static_cast<std::size_t>(shape.response_len));
  for (std::int64_t n = 1; n <= shape.response_len; ++n) {
    const double v = profile.value(n);
    if (!(v > 0.0 && v <= 1.0))
      throw GenerationError("profile value " + std::to_string(v) + " at n=" + std::to_string(n) +
                            " outside (0, 1]");
    AttentionStep step;
    step.n = n;
    step.attn.assign(static_cast<std::size_t>(shape.num_layers),
                     std::vector<double>(static_cast<std::size_t>(shape.num_visual_tokens), v));
    if (shape.noise > 0.0) {
      for (auto& row : step.attn) {
        for (auto& w : row) {
          const double u = 2.0 * detail::unit_double(rng) - 1.0;
          w = v * (1.0 + shape.noise * u);
          if (w > 1.0) {
            w = 1.0;
            ++m.clamp_events;
          }
        }
      }
    }
    if (shape.with_distributions) {
      const auto a = detail::bounded(rng, 0, shape.vocab_size - 1);
      auto b = detail::bounded(rng, 0, shape.vocab_size - 2);
      if (b >= a) ++b;
      step.dist_pair = distribution_with_distance(v, a, b);
    }
    t.steps.push_back(std::move(step));
  }
  validate(t);
  if (meta) *meta = m;
  return t;
}

/// Inclusive range of response lengths; min == max gives a fixed length.
struct LengthDistribution {
  std::int64_t min_len = 300;
  std::int64_t max_len = 300;
};

inline std::vector<AttentionTrace> generate_fleet(const DecayProfile& profile, std::size_t count,
                                                  const LengthDistribution& lengths, TraceShape shape,
                                                  std::uint64_t seed) {
  if (count < 1) throw GenerationError("fleet count must be >= 1");
  if (lengths.min_len < 1 || lengths.max_len < lengths.min_len)
    throw GenerationError("length range must satisfy 1 <= min <= max");
  std::mt19937_64 rng(seed);
  std::vector<AttentionTrace> fleet;
  fleet.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    shape.response_len = detail::bounded(rng, lengths.min_len, lengths.max_len);
    const auto trace_seed = detail::splitmix64(seed ^ detail::splitmix64(i));
    auto t = generate_trace(profile, shape, trace_seed);
    t.sample_id = "synth-" + std::to_string(seed) + "-" + std::to_string(i);
    fleet.push_back(std::move(t));
  }
  return fleet;
}

}  // namespace vizref
