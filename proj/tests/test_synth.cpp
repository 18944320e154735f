#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "vizref/metrics.hpp"
#include "vizref/synth.hpp"

using namespace vizref;

TEST(Synth, ConstantProfileIsFlat) {
  const auto t = generate_trace(DecayProfile::constant(0.4), {}, 1);
  ASSERT_EQ(t.steps.size(), 300u);
  for (std::int64_t n = 1; n <= 300; ++n) ASSERT_NEAR(attn_visual(t, n, LayerSelection::all()), 0.4, 1e-12);
}

TEST(Synth, ExponentialHitsTargetRatio) {
  const auto p = DecayProfile::exponential_to(0.4, 0.25, 300);
  const auto t = generate_trace(p, {}, 2);
  const double a1 = attn_visual(t, 1, LayerSelection::all());
  const double a300 = attn_visual(t, 300, LayerSelection::all());
  EXPECT_NEAR(a300 / a1, 0.25, 1e-10);
  EXPECT_NEAR(p.rate, std::log(4.0) / 299.0, 1e-15);
}

TEST(Synth, MetricEqualsClosedFormAtEveryStep) {
  const auto p = DecayProfile::exponential(0.9, 0.01);
  TraceShape shape;
  shape.response_len = 150;
  shape.num_layers = 3;
  const auto t = generate_trace(p, shape, 5);
  for (const auto& s : t.steps) {
    ASSERT_NEAR(attn_visual(t, s.n, LayerSelection::last()), p.value(s.n), 1e-12);
    ASSERT_NEAR(vdm(s), p.value(s.n), 1e-10);
  }
}

TEST(Synth, ReflectiveSpike) {
  const auto p = DecayProfile::reflective(0.4, std::log(4.0) / 299.0, {200}, 0.35);
  const auto t = generate_trace(p, {}, 3);
  const auto sel = LayerSelection::all();
  EXPECT_NEAR(attn_visual(t, 200, sel), 0.35, 1e-12);
  EXPECT_GT(attn_visual(t, 200, sel), attn_visual(t, 199, sel));
  EXPECT_GT(attn_visual(t, 200, sel), attn_visual(t, 201, sel));
  EXPECT_NEAR(attn_visual(t, 199, sel), 0.4 * std::exp(-p.rate * 198.0), 1e-12);
}

TEST(Synth, DistributionWithDistanceMatchesOracle) {
  for (double h = 0.0; h <= 1.0; h += 0.0125) {
    const auto d = distribution_with_distance(h, 4, 9);
    EXPECT_NO_THROW(validate(d, "dist"));
    ASSERT_NEAR(oracle::hellinger(d.with_visual, d.without_visual), h, 1e-10) << h;
  }
  EXPECT_THROW(distribution_with_distance(1.5, 1, 2), GenerationError);
}

TEST(Synth, SameSeedSameBytes) {
  TraceShape shape;
  shape.noise = 0.2;
  const auto p = DecayProfile::exponential(0.5, 0.004);
  EXPECT_EQ(write_trace(generate_trace(p, shape, 99)), write_trace(generate_trace(p, shape, 99)));
  EXPECT_NE(write_trace(generate_trace(p, shape, 99)), write_trace(generate_trace(p, shape, 100)));
  const auto f1 = generate_fleet(p, 5, {50, 80}, shape, 11);
  const auto f2 = generate_fleet(p, 5, {50, 80}, shape, 11);
  EXPECT_EQ(f1, f2);
  EXPECT_EQ(f1[3].sample_id, "synth-11-3");
}

TEST(Synth, NoiseClampsAndCounts) {
  TraceShape shape;
  shape.noise = 0.5;
  SynthMeta meta;
  const auto t = generate_trace(DecayProfile::constant(0.9), shape, 8, &meta);
  EXPECT_GT(meta.clamp_events, 0u);
  EXPECT_EQ(meta.noise, 0.5);
  for (const auto& s : t.steps)
    for (const auto& row : s.attn)
      for (double w : row) ASSERT_TRUE(w >= 0.0 && w <= 1.0);

  SynthMeta quiet;
  generate_trace(DecayProfile::constant(0.1), shape, 8, &quiet);
  EXPECT_EQ(quiet.clamp_events, 0u);
}

TEST(Synth, InvalidProfilesRejected) {
  EXPECT_THROW(generate_trace(DecayProfile::constant(0.0), {}, 1), GenerationError);
  EXPECT_THROW(generate_trace(DecayProfile::constant(1.2), {}, 1), GenerationError);
  EXPECT_THROW(generate_trace(DecayProfile::exponential(0.4, -0.1), {}, 1), GenerationError);
  EXPECT_THROW(generate_trace(DecayProfile::reflective(0.4, 0.01, {0}, 0.3), {}, 1), GenerationError);
  EXPECT_THROW(generate_trace(DecayProfile::reflective(0.4, 0.01, {5}, 1.3), {}, 1), GenerationError);
  EXPECT_THROW(DecayProfile::exponential_to(0.4, 0.0, 300), GenerationError);
  TraceShape bad;
  bad.noise = 1.0;
  EXPECT_THROW(generate_trace(DecayProfile::constant(0.4), bad, 1), GenerationError);
  EXPECT_THROW(generate_fleet(DecayProfile::constant(0.4), 0, {}, {}, 1), GenerationError);
  EXPECT_THROW(generate_fleet(DecayProfile::constant(0.4), 2, {10, 5}, {}, 1), GenerationError);
}

TEST(Synth, NoDistributionsWhenDisabled) {
  TraceShape shape;
  shape.with_distributions = false;
  shape.response_len = 20;
  const auto t = generate_trace(DecayProfile::constant(0.3), shape, 4);
  for (const auto& s : t.steps) EXPECT_FALSE(s.dist_pair.has_value());
  EXPECT_THROW(decay_curve(std::vector<AttentionTrace>{t}, Metric::kVdm, LayerSelection::all(), 5), MissingDistribution);
}

TEST(Synth, MixedLengthFleetCounts) {
  TraceShape shape;
  shape.with_distributions = false;
  const auto fleet = generate_fleet(DecayProfile::constant(0.4), 60, {40, 200}, shape, 21);
  const auto c = decay_curve(fleet, Metric::kAttnVisual, LayerSelection::all(), 20);
  ASSERT_EQ(c.size(), 10u);
  EXPECT_EQ(c.n_samples.front(), 60u);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(c.n_samples[i], c.n_samples[i - 1]);
  for (double m : c.mean) EXPECT_NEAR(m, 0.4, 1e-12);
}

TEST(Synth, ConstantFleetCurveIsFlat) {
  const auto fleet = generate_fleet(DecayProfile::constant(0.3), 100, {}, {}, 5);
  const auto c = decay_curve(fleet, Metric::kAttnVisual, LayerSelection::all(), 25);
  ASSERT_EQ(c.size(), 12u);
  for (double m : c.mean) EXPECT_NEAR(m, 0.3, 1e-12);
  EXPECT_NEAR(c.mean.back() / c.mean.front(), 1.0, 1e-9);
}
