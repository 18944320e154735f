#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "vizref/metrics.hpp"
#include "vizref/synth.hpp"

using namespace vizref;

namespace {

AttentionTrace two_layer_trace(std::vector<double> l1, std::vector<double> l2) {
  json doc = {{"sample_id", "t"},
              {"layer_ids", {3, 9}},
              {"partition", {{"visual_span", {0, 2}}, {"question_span", {2, 3}}, {"response_start", 3}, {"response_len", 5}}},
              {"steps", {{{"n", 2}, {"attn", {l1, l2}}, {"dist_pair", nullptr}}}}};
  return trace_from_json(doc);
}

AttentionStep step_with(std::vector<double> with, std::vector<double> without) {
  AttentionStep s;
  s.n = 1;
  DistributionPair d;
  for (std::size_t i = 0; i + 1 < with.size(); ++i) d.support_ids.push_back(static_cast<std::int64_t>(i) + 100);
  d.support_ids.push_back(kOtherTokenId);
  d.with_visual = std::move(with);
  d.without_visual = std::move(without);
  s.dist_pair = d;
  return s;
}

// Frozen from the independent scalar evaluation
// 2^-1/2 * sqrt((sqrt(.5)-sqrt(.9))^2 + (sqrt(.5)-sqrt(.1))^2).
constexpr double kHellingerHalfVsNinety = 0.32491969623290634;

}  // namespace

TEST(AttnVisual, HandEvaluatedExample) {
  const auto t = two_layer_trace({0.2, 0.0}, {0.1, 0.3});
  EXPECT_NEAR(attn_visual(t, 2, LayerSelection::all()), 0.6 / 3.0, 1e-15);
  EXPECT_NEAR(attn_visual(t, 2, LayerSelection::last()), 0.2, 1e-15);
  EXPECT_NEAR(attn_visual(t, 2, LayerSelection::of({3})), 0.2, 1e-15);
}

TEST(AttnVisual, SingleEntry) {
  json doc = oracle::flat_trace_doc({0.5}, 1);
  EXPECT_EQ(attn_visual(trace_from_json(doc), 1, LayerSelection::all()), 0.5);
}

TEST(AttnVisual, Errors) {
  const auto zero = two_layer_trace({0.0, 0.0}, {0.0, 0.0});
  EXPECT_THROW(attn_visual(zero, 2, LayerSelection::all()), DegenerateAttention);
  const auto t = two_layer_trace({0.2, 0.0}, {0.1, 0.3});
  EXPECT_THROW(attn_visual(t, 1, LayerSelection::all()), MissingStep);
  EXPECT_THROW(attn_visual(t, 2, LayerSelection::of({4})), ValidationError);
  EXPECT_THROW(attn_visual(t, 2, LayerSelection::of({})), ValidationError);
}

TEST(AttnVisual, MatchesBruteForceOnRandomTraces) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto doc = oracle::random_trace_doc(rng);
    const auto t = trace_from_json(doc);
    // Random non-empty layer subset.
    std::vector<std::size_t> idx;
    std::vector<std::int64_t> ids;
    for (std::size_t l = 0; l < t.layer_ids.size(); ++l)
      if (rng() % 2 == 0) {
        idx.push_back(l);
        ids.push_back(t.layer_ids[l]);
      }
    if (idx.empty()) {
      idx.push_back(0);
      ids.push_back(t.layer_ids[0]);
    }
    for (std::size_t s = 0; s < t.steps.size(); ++s) {
      const double expected = oracle::attn(doc["steps"][s], idx);
      if (std::isnan(expected)) {
        EXPECT_THROW(attn_visual(t, t.steps[s].n, LayerSelection::of(ids)), DegenerateAttention);
      } else {
        ASSERT_NEAR(attn_visual(t, t.steps[s].n, LayerSelection::of(ids)), expected, 1e-12);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(LayerSelectionParse, Specs) {
  EXPECT_EQ(LayerSelection::parse("all").mode, LayerSelection::Mode::kAll);
  EXPECT_EQ(LayerSelection::parse("last").mode, LayerSelection::Mode::kLast);
  auto sel = LayerSelection::parse("0,5,27");
  EXPECT_EQ(sel.layer_ids, (std::vector<std::int64_t>{0, 5, 27}));
  EXPECT_THROW(LayerSelection::parse("1,,2"), ValidationError);
  EXPECT_THROW(LayerSelection::parse("x"), ValidationError);
}

TEST(Hellinger, Examples) {
  const std::vector<double> p{0.25, 0.25, 0.5};
  EXPECT_EQ(hellinger(p, p), 0.0);
  EXPECT_EQ(hellinger(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  const double h = hellinger(std::vector<double>{0.5, 0.5}, std::vector<double>{0.9, 0.1});
  EXPECT_NEAR(h, 0.3249, 1e-4);
  EXPECT_NEAR(h, kHellingerHalfVsNinety, 1e-15);
}

TEST(Hellinger, Errors) {
  EXPECT_THROW(hellinger(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), AlignmentError);
  EXPECT_THROW(hellinger(std::vector<double>{1.2, -0.2}, std::vector<double>{0.5, 0.5}), ValidationError);
  EXPECT_THROW(hellinger(std::vector<double>{0.5, 0.4}, std::vector<double>{0.5, 0.5}), ValidationError);
}

TEST(Hellinger, MetricProperties) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto k = static_cast<std::size_t>(oracle::between(rng, 1, 12));
    const auto p = oracle::random_distribution(rng, k);
    const auto q = oracle::random_distribution(rng, k);
    const double pq = hellinger(p, q);
    ASSERT_EQ(pq, hellinger(q, p));
    ASSERT_GE(pq, 0.0);
    ASSERT_LE(pq, 1.0);
    ASSERT_EQ(hellinger(p, p), 0.0);
    ASSERT_NEAR(pq, oracle::hellinger(p, q), 1e-12);
    if (p != q) {
      ASSERT_GT(pq, 0.0);
    }

    std::vector<std::size_t> perm(k);
    for (std::size_t j = 0; j < k; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pp(k), qq(k);
    for (std::size_t j = 0; j < k; ++j) {
      pp[j] = p[perm[j]];
      qq[j] = q[perm[j]];
    }
    ASSERT_NEAR(hellinger(pp, qq), pq, 1e-14);
  }
}

TEST(Vdm, Examples) {
  EXPECT_EQ(vdm(step_with({0.3, 0.3, 0.4}, {0.3, 0.3, 0.4})), 0.0);
  EXPECT_EQ(vdm(step_with({1, 0, 0}, {0, 1, 0})), 1.0);
  EXPECT_NEAR(vdm(step_with({0.5, 0.5, 0}, {0.9, 0.1, 0})), kHellingerHalfVsNinety, 1e-15);
  AttentionStep bare;
  EXPECT_THROW(vdm(bare), MissingDistribution);
}

TEST(Vdm, EqualDistributionsGiveZeroForAnySupport) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_distribution(rng, static_cast<std::size_t>(oracle::between(rng, 1, 300)));
    p.push_back(0.0);
    EXPECT_EQ(vdm(step_with(p, p)), 0.0);
  }
}

// ---------------------------------------------------------------------------

TEST(DecayCurve, ConstantTraceIsFlat) {
  std::vector<AttentionTrace> traces{trace_from_json(oracle::flat_trace_doc(std::vector<double>(95, 0.4)))};
  const auto c = decay_curve(traces, Metric::kAttnVisual, LayerSelection::all(), 10);
  ASSERT_EQ(c.size(), 10u);
  for (std::size_t b = 0; b < c.size(); ++b) {
    EXPECT_NEAR(c.mean[b], 0.4, 1e-15);
    EXPECT_EQ(c.ci_low[b], c.mean[b]);
    EXPECT_EQ(c.ci_high[b], c.mean[b]);
    EXPECT_EQ(c.bucket_centers[b], 10.0 * static_cast<double>(b) + 5.5);
  }
}

TEST(DecayCurve, TwoPointMean) {
  std::vector<AttentionTrace> traces{trace_from_json(oracle::flat_trace_doc(std::vector<double>(20, 0.2))),
                                     trace_from_json(oracle::flat_trace_doc(std::vector<double>(20, 0.6)))};
  const auto c = decay_curve(traces, Metric::kAttnVisual, LayerSelection::all(), 5);
  for (auto m : c.mean) EXPECT_NEAR(m, 0.4, 1e-15);
  for (auto n : c.n_samples) EXPECT_EQ(n, 2u);
}

TEST(DecayCurve, MeansMatchFlatReaggregation) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<json> docs;
    std::vector<AttentionTrace> traces;
    for (int i = 0; i < 8; ++i) {
      docs.push_back(oracle::random_trace_doc(rng));
      traces.push_back(trace_from_json(docs.back()));
    }
    const std::int64_t bucket = oracle::between(rng, 1, 9);
    const auto c = decay_curve(traces, Metric::kAttnVisual, LayerSelection::all(), bucket);
    std::map<std::int64_t, std::pair<double, int>> flat;
    for (const auto& d : docs) {
      std::vector<std::size_t> all(d["layer_ids"].size());
      for (std::size_t l = 0; l < all.size(); ++l) all[l] = l;
      for (const auto& s : d["steps"]) {
        const double v = oracle::attn(s, all);
        if (std::isnan(v)) continue;
        auto& acc = flat[(s["n"].get<std::int64_t>() - 1) / bucket];
        acc.first += v;
        acc.second += 1;
      }
    }
    ASSERT_EQ(c.size(), flat.size());
    std::size_t b = 0;
    for (const auto& [key, acc] : flat) {
      EXPECT_NEAR(c.mean[b], acc.first / acc.second, 1e-12);
      EXPECT_DOUBLE_EQ(c.bucket_centers[b], static_cast<double>(key * bucket) + (bucket + 1) / 2.0);
      ++b;
    }
  }
}

TEST(DecayCurve, BootstrapBandContainsMean) {
  std::mt19937_64 data_rng(3);
  std::vector<AttentionTrace> traces;
  for (int i = 0; i < 25; ++i) traces.push_back(trace_from_json(oracle::random_trace_doc(data_rng)));
  std::mt19937_64 rng(99);
  const auto c = decay_curve(traces, Metric::kAttnVisual, LayerSelection::last(), 7, {500, 0.95}, rng);
  ASSERT_GT(c.size(), 0u);
  bool some_width = false;
  for (std::size_t b = 0; b < c.size(); ++b) {
    EXPECT_LE(c.ci_low[b], c.mean[b]);
    EXPECT_LE(c.mean[b], c.ci_high[b]);
    some_width |= c.ci_high[b] > c.ci_low[b];
  }
  EXPECT_TRUE(some_width);

  std::mt19937_64 again(99);
  const auto c2 = decay_curve(traces, Metric::kAttnVisual, LayerSelection::last(), 7, {500, 0.95}, again);
  EXPECT_EQ(c.ci_low, c2.ci_low);
  EXPECT_EQ(c.ci_high, c2.ci_high);
}

TEST(DecayCurve, Errors) {
  std::vector<AttentionTrace> none;
  EXPECT_THROW(decay_curve(none, Metric::kAttnVisual, LayerSelection::all(), 25), EmptyInput);
  std::vector<AttentionTrace> flat{trace_from_json(oracle::flat_trace_doc({0.1, 0.2}))};
  EXPECT_THROW(decay_curve(flat, Metric::kVdm, LayerSelection::all(), 25), MissingDistribution);
  EXPECT_THROW(decay_curve(flat, Metric::kAttnVisual, LayerSelection::all(), 0), ValidationError);
}

TEST(DecayCurve, ZeroAttentionStepsAreSkipped) {
  std::vector<AttentionTrace> t{trace_from_json(oracle::flat_trace_doc({0.3, 0.0, 0.5}))};
  const auto c = decay_curve(t, Metric::kAttnVisual, LayerSelection::all(), 25);
  EXPECT_EQ(c.skipped_steps, 1u);
  EXPECT_NEAR(c.mean[0], 0.4, 1e-15);
}

TEST(DecayCurve, ExponentialFleetMatchesClosedForm) {
  const auto profile = DecayProfile::exponential_to(0.4, 0.25, 300);
  TraceShape shape;
  const auto fleet = generate_fleet(profile, 20, {300, 300}, shape, 1);
  const auto c = decay_curve(fleet, Metric::kAttnVisual, LayerSelection::all(), 25);
  ASSERT_EQ(c.size(), 12u);
  const double rate = std::log(4.0) / 299.0;
  for (std::size_t b = 0; b < c.size(); ++b) {
    double expected = 0.0;
    for (int n = static_cast<int>(b) * 25 + 1; n <= static_cast<int>(b + 1) * 25; ++n)
      expected += 0.4 * std::exp(-rate * (n - 1));
    EXPECT_NEAR(c.mean[b], expected / 25.0, 1e-10);
  }
  const double ratio = c.mean.back() / c.mean.front();
  EXPECT_GE(ratio, 0.2);
  EXPECT_LE(ratio, 0.3);

  const auto v = decay_curve(fleet, Metric::kVdm, LayerSelection::all(), 25);
  for (std::size_t b = 0; b < v.size(); ++b) EXPECT_NEAR(v.mean[b], c.mean[b], 1e-10);
}

TEST(CurveCsv, Format) {
  DecayCurve one;
  one.bucket_centers = {13};
  one.mean = one.ci_low = one.ci_high = {0.25};
  one.n_samples = {4};
  EXPECT_EQ(export_curve_csv(one), "bucket_center,mean,ci_low,ci_high,n_samples\n13,0.25,0.25,0.25,4\n");

  DecayCurve three;
  three.bucket_centers = {38, 13, 63};
  three.mean = {0.2, 0.3, 0.1};
  three.ci_low = {0.1, 0.2, 0.05};
  three.ci_high = {0.3, 0.4, 0.15};
  three.n_samples = {2, 3, 1};
  EXPECT_EQ(export_curve_csv(three),
            "bucket_center,mean,ci_low,ci_high,n_samples\n"
            "13,0.3,0.2,0.4,3\n"
            "38,0.2,0.1,0.3,2\n"
            "63,0.1,0.05,0.15,1\n");
}
