#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "vizref/prompts.hpp"

using namespace vizref;

namespace {

std::string asset(std::string_view name) {
  const std::string path = std::string(VIZREF_SOURCE_DIR) + "/assets/prompts/v1/" + std::string(name) + ".txt";
  std::ifstream in(path, std::ios::binary);
  if (!in) ADD_FAILURE() << "missing asset " << path;
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Prompts, EmbeddedTextMatchesAssetFiles) {
  for (const auto& t : prompts::kAll) EXPECT_EQ(asset(t.name), t.text) << t.name;
}

TEST(Prompts, Anchors) {
  EXPECT_NE(prompts::kCohesionEnhancement.find("Let's check the image again"), std::string_view::npos);
  EXPECT_NE(prompts::kVisualResponder.find("concise description of the image"), std::string_view::npos);
  EXPECT_NE(prompts::kVisualResponder.find("avoiding answering with yes/no"), std::string_view::npos);
  EXPECT_NE(prompts::kRlTraining.find("MUST BE enclosed within <think> </think>"), std::string_view::npos);
  EXPECT_NE(prompts::kVisualRequester.find("'Thought': 'analyze the problem here.'"), std::string_view::npos);
  EXPECT_NE(prompts::kSummarizer.find("Conduct an analysis before you give"), std::string_view::npos);
}

TEST(Prompts, MarkersPresent) {
  EXPECT_NE(prompts::kVisualRequester.find("<question>"), std::string_view::npos);
  EXPECT_NE(prompts::kVisualRequester.find("<info>"), std::string_view::npos);
  EXPECT_NE(prompts::kVisualResponder.find("<question>"), std::string_view::npos);
  EXPECT_NE(prompts::kSummarizer.find("<info>"), std::string_view::npos);
  EXPECT_NE(prompts::kCohesionEnhancement.find("<Question>"), std::string_view::npos);
  EXPECT_NE(prompts::kCohesionEnhancement.find("<Reasoning>"), std::string_view::npos);
  for (auto c : prompts::kConnectors) EXPECT_NE(prompts::kCohesionEnhancement.find(c), std::string_view::npos);
}

TEST(Prompts, RenderIsSinglePass) {
  const auto out = prompts::render("Q: <question> I: <info>", {{"<question>", "<info>"}, {"<info>", "facts"}});
  EXPECT_EQ(out, "Q: <info> I: facts");
  EXPECT_EQ(prompts::render("a < b <x>", {{"<x>", "y"}}), "a < b y");
  EXPECT_EQ(prompts::render("none", {}), "none");
}

TEST(Prompts, RlPromptAppendsQuestion) {
  const auto p = prompts::rl_prompt("What is shown?");
  EXPECT_EQ(p.substr(0, prompts::kRlTraining.size()), prompts::kRlTraining);
  EXPECT_EQ(p.substr(prompts::kRlTraining.size()), " What is shown?");
}
