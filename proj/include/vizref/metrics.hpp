#pragma once

// Visual-attention and visual-dependency metrics over attention traces, and
// their aggregation into position-bucketed decay curves.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vizref/error.hpp"
#include "vizref/trace.hpp"

namespace vizref {

/// Which recorded layers an attention metric sums over.
struct LayerSelection {
  enum class Mode { kAll, kLast, kExplicit };
  Mode mode = Mode::kAll;
  std::vector<std::int64_t> layer_ids;  // kExplicit only

  static LayerSelection all() { return {}; }
  static LayerSelection last() { return {Mode::kLast, {}}; }
  static LayerSelection of(std::vector<std::int64_t> ids) { return {Mode::kExplicit, std::move(ids)}; }

  /// Parses "all", "last", or a comma-separated list of layer ids.
  static LayerSelection parse(const std::string& spec) {
    if (spec == "all" || spec.empty()) return all();
    if (spec == "last") return last();
    std::vector<std::int64_t> ids;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      auto comma = spec.find(',', pos);
      if (comma == std::string::npos) comma = spec.size();
      const auto token = spec.substr(pos, comma - pos);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || v < 0)
        throw ValidationError("layers", "bad layer spec '" + spec + "'");
      ids.push_back(v);
      pos = comma + 1;
    }
    return of(std::move(ids));
  }

  /// Indices into trace.layer_ids. Throws ValidationError on unknown ids.
  std::vector<std::size_t> resolve(const AttentionTrace& trace) const {
    std::vector<std::size_t> out;
    switch (mode) {
      case Mode::kAll:
        for (std::size_t i = 0; i < trace.layer_ids.size(); ++i) out.push_back(i);
        break;
      case Mode::kLast:
        if (!trace.layer_ids.empty()) out.push_back(trace.layer_ids.size() - 1);
        break;
      case Mode::kExplicit:
        for (auto id : layer_ids) {
          auto idx = trace.layer_index(id);
          if (!idx)
            throw ValidationError("layers", "layer " + std::to_string(id) + " not recorded in trace '" +
                                                trace.sample_id + "'");
          if (std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
        }
        break;
    }
    if (out.empty()) throw ValidationError("layers", "empty layer selection");
    return out;
  }
};

/// Mean attention from one response token to the visual tokens over the
/// chosen layers, counting only strictly positive entries in the denominator.
inline double attn_visual(const AttentionStep& step, std::span<const std::size_t> layer_indices) {
  double sum = 0.0;
  std::size_t positive = 0;
  for (auto l : layer_indices) {
    for (double a : step.attn.at(l)) {
      sum += a;
      if (a > 0.0) ++positive;
    }
  }
  if (positive == 0)
    throw DegenerateAttention("no positive attention to visual tokens at n=" + std::to_string(step.n));
  return sum / static_cast<double>(positive);
}

inline double attn_visual(const AttentionTrace& trace, std::int64_t n, const LayerSelection& layers) {
  const auto* step = trace.find_step(n);
  if (!step) throw MissingStep("trace '" + trace.sample_id + "' has no step n=" + std::to_string(n));
  const auto idx = layers.resolve(trace);
  return attn_visual(*step, idx);
}

/// Hellinger distance 2^-1/2 * ||sqrt(p) - sqrt(q)||_2 between two
/// distributions on the same support.
inline double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw AlignmentError("distributions have different lengths (" + std::to_string(p.size()) + " vs " +
                         std::to_string(q.size()) + ")");
  validate_probabilities(p, "p");
  validate_probabilities(q, "q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    acc += d * d;
  }
  // Rounding can push the sum a hair past 2 for disjoint supports.
  return std::min(1.0, std::sqrt(acc) / std::sqrt(2.0));
}

/// Visual dependency measure: Hellinger distance between the next-token
/// distributions with and without visual tokens (OTHER bucket included).
inline double vdm(const AttentionStep& step) {
  if (!step.dist_pair)
    throw MissingDistribution("step n=" + std::to_string(step.n) + " has no distribution pair");
  return hellinger(step.dist_pair->with_visual, step.dist_pair->without_visual);
}

// ---------------------------------------------------------------------------
// Decay curves

enum class Metric { kAttnVisual, kVdm };

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
};

struct DecayCurve {
  std::vector<double> bucket_centers;
  std::vector<double> mean;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::size_t> n_samples;
  // Steps dropped because their attention was all zero.
  std::size_t skipped_steps = 0;

  std::size_t size() const { return bucket_centers.size(); }
};

namespace detail {

struct SampleBucket {
  double sum = 0.0;
  std::size_t count = 0;
};

// Linear-interpolated empirical quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& xs, double q) {
  if (xs.size() == 1) return xs.front();
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

inline DecayCurve decay_curve_impl(std::span<const AttentionTrace> traces, Metric metric,
                                   const LayerSelection& layers, std::int64_t bucket_size,
                                   const BootstrapOptions* boot, std::mt19937_64* rng) {
  if (bucket_size < 1) throw ValidationError("bucket_size", "must be >= 1");
  if (traces.empty()) throw EmptyInput("no traces supplied");
  if (boot) {
    if (boot->resamples < 1) throw ValidationError("bootstrap.resamples", "must be >= 1");
    if (!(boot->level > 0.0 && boot->level < 1.0))
      throw ValidationError("bootstrap.level", "must lie in (0, 1)");
  }

  // bucket -> per-trace accumulators (only traces that contributed).
  std::map<std::int64_t, std::vector<SampleBucket>> buckets;
  std::size_t skipped = 0;
  bool any_distribution = false;

  for (const auto& trace : traces) {
    std::vector<std::size_t> idx;
    if (metric == Metric::kAttnVisual) idx = layers.resolve(trace);
    std::map<std::int64_t, SampleBucket> mine;
    for (const auto& step : trace.steps) {
      double value = 0.0;
      if (metric == Metric::kAttnVisual) {
        try {
          value = attn_visual(step, idx);
        } catch (const DegenerateAttention&) {
          ++skipped;
          continue;
        }
      } else {
        if (!step.dist_pair) continue;
        any_distribution = true;
        value = vdm(step);
      }
      auto& acc = mine[(step.n - 1) / bucket_size];
      acc.sum += value;
      acc.count += 1;
    }
    for (const auto& [b, acc] : mine) buckets[b].push_back(acc);
  }

  if (metric == Metric::kVdm && !any_distribution)
    throw MissingDistribution("no trace carries distribution pairs");
  if (buckets.empty()) throw EmptyInput("no step contributed a metric value");

  DecayCurve curve;
  curve.skipped_steps = skipped;
  for (const auto& [b, samples] : buckets) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
      sum += s.sum;
      count += s.count;
    }
    const double mean = sum / static_cast<double>(count);
    double lo = mean, hi = mean;
    if (boot) {
      std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
      std::vector<double> stats;
      stats.reserve(boot->resamples);
      for (std::size_t r = 0; r < boot->resamples; ++r) {
        double rs = 0.0;
        std::size_t rc = 0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
          const auto& s = samples[pick(*rng)];
          rs += s.sum;
          rc += s.count;
        }
        stats.push_back(rs / static_cast<double>(rc));
      }
      std::sort(stats.begin(), stats.end());
      const double alpha = 1.0 - boot->level;
      lo = std::min(mean, quantile_sorted(stats, alpha / 2.0));
      hi = std::max(mean, quantile_sorted(stats, 1.0 - alpha / 2.0));
    }
    curve.bucket_centers.push_back(static_cast<double>(b * bucket_size) +
                                   static_cast<double>(bucket_size + 1) / 2.0);
    curve.mean.push_back(mean);
    curve.ci_low.push_back(lo);
    curve.ci_high.push_back(hi);
    curve.n_samples.push_back(samples.size());
  }
  return curve;
}

}  // namespace detail

/// Groups every (trace, step) metric value by floor((n-1)/bucket_size) and
/// returns the per-bucket pooled mean. Empty buckets are omitted; the band
/// collapses onto the mean.
inline DecayCurve decay_curve(std::span<const AttentionTrace> traces, Metric metric,
                              const LayerSelection& layers, std::int64_t bucket_size) {
  return detail::decay_curve_impl(traces, metric, layers, bucket_size, nullptr, nullptr);
}

/// As above, plus a percentile bootstrap band per bucket. Resampling is over
/// traces (the per-sample bucket contributions), drawing from `rng`.
inline DecayCurve decay_curve(std::span<const AttentionTrace> traces, Metric metric,
                              const LayerSelection& layers, std::int64_t bucket_size,
                              const BootstrapOptions& boot, std::mt19937_64& rng) {
  return detail::decay_curve_impl(traces, metric, layers, bucket_size, &boot, &rng);
}

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline std::string export_curve_csv(const DecayCurve& curve) {
  std::vector<std::size_t> order(curve.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return curve.bucket_centers[a] < curve.bucket_centers[b];
  });
  std::string out = "bucket_center,mean,ci_low,ci_high,n_samples\n";
  for (auto i : order) {
    out += detail::shortest(curve.bucket_centers[i]) + ',' + detail::shortest(curve.mean[i]) + ',' +
           detail::shortest(curve.ci_low[i]) + ',' + detail::shortest(curve.ci_high[i]) + ',' +
           std::to_string(curve.n_samples[i]) + '\n';
  }
  return out;
}

}  // namespace vizref
