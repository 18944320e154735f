#pragma once

// Role prompt templates (version v1). The text must stay byte-identical to
// assets/prompts/v1/*.txt; tests/test_prompts.cpp enforces this.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vizref::prompts {

inline constexpr std::string_view kVersion = "v1";

inline constexpr std::string_view kVisualRequester =
    R"(You currently need to address the following question: <question> The information you need is in an image, but you can't see the image right now. At the same time, you're not capable of complex reasoning.

However, you can can consult the following two Vision Expert for help. You can ask him a single question for information in the picture, for example, you could ask him, "What color is the bird in the picture?"

Use the following format:
{'Thought': 'analyze the problem here.', 'Question':'Questions you want to ask the Vision EXPERT'}

<split>
And the information you know currently is as follows:
<info>
)";

inline constexpr std::string_view kVisualResponder =
    R"(Please answer my question in a tone that provides a concise description of the image. If it is a yes/no question, focus on describing the relevant visual information, avoiding answering with yes/no.

Question:
<question>
)";

inline constexpr std::string_view kSummarizer =
    R"(The following is the available information:
<info>

Please solve the following problems step by step:
<question>

Use the following format:
Thought: Conduct an analysis before you give me an answer.
Final Answer: "The final answer you get when you have finished reasoning."
)";

inline constexpr std::string_view kCohesionEnhancement =
    R"(Below is the reasoning steps for the question <Question>, but there are some disjointed parts marked with "...". Please fill in the gaps to improve coherence. You can use some connecting phrases such as "Let's double check," "Let's check the image again," and "To sum up," and "Wait".

Use the following format:
{'Thought': 'Reasoning steps', 'Final answer':'\boxed{...}'}
The final answer (only choice like A, B, C, D) MUST BE put in \boxed{}.

The reasoning steps is:
"""
<Reasoning>
"""
)";

inline constexpr std::string_view kRlTraining =
    R"(You FIRST think about the reasoning process as an internal monologue and then provide the final answer.
The reasoning process MUST BE enclosed within <think> </think> tags. The final answer MUST BE put in \boxed{}.
Qustion:)";

struct NamedTemplate {
  std::string_view name;  // asset file stem
  std::string_view text;
};

inline constexpr std::array<NamedTemplate, 5> kAll = {{
    {"visual_requester", kVisualRequester},
    {"visual_responder", kVisualResponder},
    {"summarizer", kSummarizer},
    {"cohesion_enhancement", kCohesionEnhancement},
    {"rl_training", kRlTraining},
}};

/// Connective phrases the cohesion template suggests.
inline constexpr std::array<std::string_view, 4> kConnectors = {
    "Let's double check", "Let's check the image again", "To sum up", "Wait"};

/// Gap marker between context segments handed to the cohesion rewrite.
inline constexpr std::string_view kGapMarker = "...";

/// Single left-to-right pass: substituted text is never rescanned, so values
/// that themselves contain markers are inserted verbatim.
inline std::string render(std::string_view tmpl,
                          const std::vector<std::pair<std::string_view, std::string_view>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '<') {
      for (const auto& [marker, value] : values) {
        if (tmpl.substr(i, marker.size()) == marker) {
          out.append(value);
          i += marker.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

/// RL rollout prompt with the question appended after the "Qustion:" label.
inline std::string rl_prompt(std::string_view question) {
  std::string out(kRlTraining);
  out += ' ';
  out.append(question);
  return out;
}

}  // namespace vizref::prompts
