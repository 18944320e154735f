#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "oracles.hpp"
#include "vizref/service.hpp"

using namespace vizref;

namespace {

json request(const json& trace, const std::string& response, const std::string& answer) {
  return {{"trace", trace}, {"response", response}, {"answer", answer}};
}

const std::string kGood = "<think>look again</think> \\boxed{B}";

}  // namespace

TEST(RewardHandler, ScoresRollout) {
  const auto reply = handle_reward_request(request(oracle::flat_trace_doc({0.4, 0.4, 0.2, 0.2}), kGood, "B").dump(), {});
  EXPECT_EQ(reply.status, 200);
  const auto j = json::parse(reply.body);
  EXPECT_EQ(j["r_a"], 1);
  EXPECT_EQ(j["r_f"], 1);
  EXPECT_NEAR(j["r_v"].get<double>(), 1.0, 1e-15);
  EXPECT_NEAR(j["r_o"].get<double>(), 1.6, 1e-15);
  EXPECT_EQ(reply.body.substr(0, 7), "{\"r_a\":");
}

TEST(RewardHandler, LambdaOverridesAndCap) {
  auto body = request(oracle::flat_trace_doc({0.1, 0.1, 0.1, 0.5, 0.5, 0.5}), kGood, "B");
  body["lambda_v"] = 1.0;
  body["lambda_f"] = 0.0;
  auto j = json::parse(handle_reward_request(body.dump(), {}).body);
  EXPECT_NEAR(j["r_o"].get<double>(), 1.0 + 7.5, 1e-12);
  RewardConfig capped;
  capped.r_v_cap = 2.0;
  j = json::parse(handle_reward_request(body.dump(), capped).body);
  EXPECT_EQ(j["r_v"], 2.0);
}

TEST(RewardHandler, ClientErrors) {
  const auto trace = oracle::flat_trace_doc({0.4, 0.4, 0.2, 0.2});
  auto body = request(trace, kGood, "B");
  body.erase("answer");
  auto reply = handle_reward_request(body.dump(), {});
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(json::parse(reply.body)["field"], "answer");

  reply = handle_reward_request("{not json", {});
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(json::parse(reply.body)["error"], "ParseError");

  auto bad_trace = trace;
  bad_trace["steps"][0]["attn"][0][0] = 1.5;
  reply = handle_reward_request(request(bad_trace, kGood, "B").dump(), {});
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(json::parse(reply.body)["field"], "trace.steps[0].attn[0][0]");

  reply = handle_reward_request(request(trace, kGood, "   ").dump(), {});
  EXPECT_EQ(reply.status, 400);

  body = request(trace, kGood, "B");
  body["lambda_v"] = "big";
  EXPECT_EQ(handle_reward_request(body.dump(), {}).status, 400);
  EXPECT_EQ(handle_reward_request("[1, 2]", {}).status, 400);
}

TEST(RewardHandler, DegenerateTraceIs422OnlyWhenScored) {
  const auto zeros = oracle::flat_trace_doc({0.0, 0.0, 0.0, 0.0});
  auto reply = handle_reward_request(request(zeros, kGood, "B").dump(), {});
  EXPECT_EQ(reply.status, 422);
  EXPECT_EQ(json::parse(reply.body)["error"], "DegenerateAttention");
  reply = handle_reward_request(request(zeros, kGood, "C").dump(), {});
  EXPECT_EQ(reply.status, 200);

  auto one_half = oracle::flat_trace_doc({0.4, 0.4, 0.2, 0.2});
  one_half["steps"] = json::array({one_half["steps"][3]});
  reply = handle_reward_request(request(one_half, kGood, "B").dump(), {});
  EXPECT_EQ(reply.status, 422);
  EXPECT_EQ(json::parse(reply.body)["error"], "DegenerateHalf");
}

TEST(RewardServerLive, HealthAndConcurrentRequests) {
  RewardServer server({});
  const int port = server.bind_any();
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client probe("127.0.0.1", port);
  auto health = probe.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  std::mt19937_64 rng(3);
  oracle::RandomTraceOptions o;
  o.all_positive_last = true;
  o.keep_prob = 1.0;
  const auto body = request(oracle::random_trace_doc(rng, o), kGood, "B").dump();
  const auto expected = handle_reward_request(body, {});
  ASSERT_EQ(expected.status, 200);

  std::vector<std::future<std::pair<int, std::string>>> futures;
  for (int i = 0; i < 32; ++i)
    futures.push_back(std::async(std::launch::async, [&] {
      httplib::Client c("127.0.0.1", port);
      auto res = c.Post("/v1/reward", body, "application/json");
      return res ? std::make_pair(res->status, res->body) : std::make_pair(-1, std::string());
    }));
  for (auto& f : futures) {
    const auto [status, reply] = f.get();
    EXPECT_EQ(status, 200);
    EXPECT_EQ(reply, expected.body);
  }
  server.stop();
  t.join();
}
