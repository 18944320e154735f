#pragma once

// Reasoning-data construction through LLM/VLM interaction.
//
// Each round: the requester (LLM) reads the question and the accumulated
// context and asks one visual question; the responder (VLM) describes the
// image with respect to it; the summarizer (LLM) attempts a final answer.
// A wrong summary is discarded and a new round begins. A correct summary is
// kept and the context is rewritten into one cohesive chain. Samples solved
// in the first round are rejected because they contain no reflection.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vizref/error.hpp"
#include "vizref/gateway.hpp"
#include "vizref/prompts.hpp"
#include "vizref/reward.hpp"
#include "vizref/trace.hpp"

namespace vizref {

// A round-local failure (unparseable reply after the reprompt, empty
// description). Consumes one round of the budget.
class RoundError : public Error {
 public:
  explicit RoundError(const std::string& what) : Error("RoundError", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("IoError", what) {}
};

enum class ContextSource { kRequesterThought, kResponderDescription, kSummarizerOutput };

struct ContextEntry {
  ContextSource source;
  std::string text;
};

/// Append-only reasoning context shared by the roles within one task.
class ReasoningContext {
 public:
  void append(ContextSource source, std::string text) { entries_.push_back({source, std::move(text)}); }

  const std::vector<ContextEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Flat <info> text for the requester and summarizer templates.
  std::string serialize_info() const { return join("\n"); }

  /// Segments separated by the "..." gap marker for the cohesion rewrite.
  std::string serialize_for_cohesion() const {
    return join("\n" + std::string(prompts::kGapMarker) + "\n");
  }

 private:
  static const char* prefix(ContextSource s) {
    switch (s) {
      case ContextSource::kRequesterThought: return "Analysis: ";
      case ContextSource::kResponderDescription: return "Visual information: ";
      case ContextSource::kSummarizerOutput: return "Summary: ";
    }
    return "";
  }

  std::string join(const std::string& sep) const {
    std::string out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i) out += sep;
      out += prefix(entries_[i].source);
      out += entries_[i].text;
    }
    return out;
  }

  std::vector<ContextEntry> entries_;
};

struct RoleTemperatures {
  double requester = 0.7;
  double responder = 0.2;
  double summarizer = 0.7;
  double cohesion = 0.7;
};

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ForgeConfig {
  int max_rounds = 4;
  std::string answer_match = "normalized";
  RoleTemperatures temperatures;
  int max_tokens = 2048;
  std::string output_path = "forged.jsonl";
  int concurrency = 4;
  // Require at least one suggested connective phrase in the rewrite.
  bool strict_cohesion = false;
  std::function<std::string()> clock = utc_now_iso8601;

  void validate() const {
    if (max_rounds < 2) throw ConfigError("forge.max_rounds must be >= 2");
    if (answer_match != "normalized") throw ConfigError("forge.answer_match must be 'normalized'");
    if (concurrency < 1) throw ConfigError("forge.concurrency must be >= 1");
    if (max_tokens < 1) throw ConfigError("forge.max_tokens must be >= 1");
    for (double t : {temperatures.requester, temperatures.responder, temperatures.summarizer,
                     temperatures.cohesion})
      if (!(t >= 0.0)) throw ConfigError("forge temperatures must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Reply parsing

namespace detail {

inline std::string trim(std::string_view v) {
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
  return std::string(v);
}

inline std::size_t skip_ws(std::string_view s, std::size_t i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return i;
}

inline bool iequals_at(std::string_view s, std::size_t i, std::string_view word) {
  if (i + word.size() > s.size()) return false;
  for (std::size_t k = 0; k < word.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(s[i + k])) != std::tolower(static_cast<unsigned char>(word[k])))
      return false;
  return true;
}

// If a quoted `key` starts at i and is followed by ':' and an opening quote,
// returns the position just past that quote; `quote` receives it.
inline std::optional<std::size_t> key_value_at(std::string_view s, std::string_view key, std::size_t i,
                                               char& quote) {
  if (i >= s.size() || (s[i] != '\'' && s[i] != '"') || !iequals_at(s, i + 1, key)) return std::nullopt;
  const auto close = i + 1 + key.size();
  if (close >= s.size() || s[close] != s[i]) return std::nullopt;
  auto j = skip_ws(s, close + 1);
  if (j >= s.size() || s[j] != ':') return std::nullopt;
  j = skip_ws(s, j + 1);
  if (j >= s.size() || (s[j] != '\'' && s[j] != '"')) return std::nullopt;
  quote = s[j];
  return j + 1;
}

inline std::optional<std::size_t> find_key_value(std::string_view s, std::string_view key, std::size_t from,
                                                 char& quote) {
  for (std::size_t i = from; i < s.size(); ++i)
    if (auto v = key_value_at(s, key, i, quote)) return v;
  return std::nullopt;
}

inline std::string unescape_quotes(std::string v) {
  for (auto pos = v.find("\\'"); pos != std::string::npos; pos = v.find("\\'", pos)) v.erase(pos, 1);
  for (auto pos = v.find("\\\""); pos != std::string::npos; pos = v.find("\\\"", pos)) v.erase(pos, 1);
  return v;
}

}  // namespace detail

/// Extracts string fields from a Python-dict-style reply such as
/// {'Thought': '...', 'Question': '...'}. Keys are matched in order and
/// case-insensitively; values may contain unescaped apostrophes.
inline std::optional<std::vector<std::string>> parse_dict_reply(std::string_view text,
                                                                const std::vector<std::string_view>& keys) {
  std::vector<std::string> values;
  std::size_t cursor = text.find('{');
  if (cursor == std::string_view::npos) cursor = 0;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    char quote = '\'';
    auto start = detail::find_key_value(text, keys[k], cursor, quote);
    if (!start) break;
    std::optional<std::size_t> end;
    if (k + 1 < keys.size()) {
      // Closing quote is the one followed by ", 'NextKey'".
      for (auto i = *start; i < text.size(); ++i) {
        if (text[i] != quote) continue;
        auto j = detail::skip_ws(text, i + 1);
        if (j >= text.size() || text[j] != ',') continue;
        j = detail::skip_ws(text, j + 1);
        char q2 = 0;
        if (detail::key_value_at(text, keys[k + 1], j, q2)) {
          end = i;
          break;
        }
      }
    } else {
      // Last value: the final quote followed by a closing brace.
      for (auto i = text.size(); i-- > *start;) {
        if (text[i] != quote) continue;
        auto j = detail::skip_ws(text, i + 1);
        if (j < text.size() && text[j] == '}') {
          end = i;
          break;
        }
      }
    }
    if (!end) break;
    values.push_back(detail::unescape_quotes(std::string(text.substr(*start, *end - *start))));
    cursor = *end + 1;
  }
  if (values.size() == keys.size()) return values;

  // Fallback: strict JSON object.
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  auto j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  values.clear();
  for (auto key : keys) {
    const nlohmann::json* found = nullptr;
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key().size() == key.size() && detail::iequals_at(it.key(), 0, key)) found = &it.value();
    if (!found || !found->is_string()) return std::nullopt;
    values.push_back(found->get<std::string>());
  }
  return values;
}

struct SummaryReply {
  std::string thought;
  std::string final_answer;
};

/// Parses "Thought: ... Final Answer: ..." replies (last "Final Answer:" wins).
inline std::optional<SummaryReply> parse_summary_reply(std::string_view text) {
  static constexpr std::string_view kFinal = "final answer";
  std::optional<std::size_t> marker;
  std::size_t after = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!detail::iequals_at(text, i, kFinal)) continue;
    auto j = detail::skip_ws(text, i + kFinal.size());
    if (j < text.size() && text[j] == ':') {
      marker = i;
      after = j + 1;
    }
  }
  if (!marker) return std::nullopt;
  std::string answer = detail::trim(text.substr(after));
  if (auto boxed = extract_last_boxed(answer)) {
    answer = detail::trim(*boxed);
  } else {
    auto strip = [&](std::string_view open, std::string_view close) {
      if (answer.size() >= open.size() + close.size() && answer.rfind(open, 0) == 0 &&
          answer.compare(answer.size() - close.size(), close.size(), close) == 0)
        answer = detail::trim(answer.substr(open.size(), answer.size() - open.size() - close.size()));
    };
    strip("\"", "\"");
    strip("'", "'");
    strip("\xE2\x80\x9C", "\xE2\x80\x9D");  // curly double quotes
  }
  if (answer.empty()) return std::nullopt;
  std::string_view head = text.substr(0, *marker);
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (detail::iequals_at(head, i, "thought")) {
      auto j = detail::skip_ws(head, i + 7);
      if (j < head.size() && head[j] == ':') {
        head = head.substr(j + 1);
        break;
      }
    }
  }
  return SummaryReply{detail::trim(head), answer};
}

// ---------------------------------------------------------------------------
// Roles

inline constexpr std::string_view kReprompt =
    "\n\nYour previous reply could not be parsed. Reply again using exactly the format described above.";

namespace detail {

inline ChatResponse ask(ChatClient& client, std::string prompt, double temperature, int max_tokens,
                        std::optional<std::string> image = std::nullopt) {
  ChatRequest req;
  req.model = client.model();
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.messages.push_back({Role::kUser, std::move(prompt), std::move(image)});
  return client.complete(req);
}

// One call plus at most one reprompt; nullopt when both replies fail `parse`.
template <typename Parsed, typename Parse>
std::optional<std::pair<Parsed, std::string>> ask_parsed(ChatClient& client, const std::string& prompt,
                                                         double temperature, int max_tokens, Parse parse) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = ask(client, attempt == 0 ? prompt : prompt + std::string(kReprompt), temperature, max_tokens);
    if (auto parsed = parse(reply.text)) return std::make_pair(std::move(*parsed), std::move(reply.text));
  }
  return std::nullopt;
}

}  // namespace detail

struct RequesterTurn {
  std::string thought;
  std::string visual_question;
  std::string raw;
};

inline std::string render_requester_prompt(const ReasoningContext& ctx, std::string_view question) {
  const auto info = ctx.serialize_info();
  return prompts::render(prompts::kVisualRequester, {{"<question>", question}, {"<info>", info}});
}

inline std::string render_responder_prompt(std::string_view visual_question) {
  return prompts::render(prompts::kVisualResponder, {{"<question>", visual_question}});
}

inline std::string render_summarizer_prompt(const ReasoningContext& ctx, std::string_view question) {
  const auto info = ctx.serialize_info();
  return prompts::render(prompts::kSummarizer, {{"<info>", info}, {"<question>", question}});
}

inline std::string render_cohesion_prompt(const ReasoningContext& ctx, std::string_view question) {
  const auto reasoning = ctx.serialize_for_cohesion();
  return prompts::render(prompts::kCohesionEnhancement, {{"<Question>", question}, {"<Reasoning>", reasoning}});
}

/// Visual requester. Appends the parsed thought to `ctx`.
inline RequesterTurn request_visual(ReasoningContext& ctx, std::string_view question, ChatClient& llm,
                                    const ForgeConfig& cfg) {
  auto parsed = detail::ask_parsed<std::vector<std::string>>(
      llm, render_requester_prompt(ctx, question), cfg.temperatures.requester, cfg.max_tokens,
      [](const std::string& t) { return parse_dict_reply(t, {"Thought", "Question"}); });
  if (!parsed) throw RoundError("visual requester reply unparseable after reprompt");
  auto& [fields, raw] = *parsed;
  if (detail::trim(fields[1]).empty()) throw RoundError("visual requester asked an empty question");
  ctx.append(ContextSource::kRequesterThought, fields[0]);
  return {fields[0], fields[1], raw};
}

/// Visual responder. Appends the description to `ctx`.
inline std::string respond_visual(ReasoningContext& ctx, std::string_view visual_question,
                                  const std::string& image_ref, ChatClient& vlm, const ForgeConfig& cfg) {
  auto reply = detail::ask(vlm, render_responder_prompt(visual_question), cfg.temperatures.responder,
                           cfg.max_tokens, image_ref);
  auto text = detail::trim(reply.text);
  if (text.empty()) throw RoundError("visual responder returned an empty description");
  ctx.append(ContextSource::kResponderDescription, text);
  return text;
}

struct SummaryTurn {
  std::string thought;
  std::string final_answer;
  std::string raw;
};

/// Summarizer. Does not touch `ctx`; the caller appends only on a match.
inline SummaryTurn summarize(const ReasoningContext& ctx, std::string_view question, ChatClient& llm,
                             const ForgeConfig& cfg) {
  if (ctx.empty()) throw ValidationError("context", "summarizer needs a non-empty context");
  auto parsed = detail::ask_parsed<SummaryReply>(llm, render_summarizer_prompt(ctx, question),
                                                 cfg.temperatures.summarizer, cfg.max_tokens,
                                                 [](const std::string& t) { return parse_summary_reply(t); });
  if (!parsed) throw RoundError("summarizer reply unparseable after reprompt");
  return {parsed->first.thought, parsed->first.final_answer, parsed->second};
}

enum class RejectReason {
  kNonReflection,
  kBudgetExhausted,
  kTransport,
  kCohesionDrift,
  kCohesionParse,
  kCohesionConnectors,
};

inline const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kNonReflection: return "non_reflection";
    case RejectReason::kBudgetExhausted: return "budget_exhausted";
    case RejectReason::kTransport: return "transport";
    case RejectReason::kCohesionDrift: return "cohesion_drift";
    case RejectReason::kCohesionParse: return "cohesion_parse";
    case RejectReason::kCohesionConnectors: return "cohesion_connectors";
  }
  return "unknown";
}

struct Rejection {
  RejectReason reason;
  std::string detail;
};

struct CohesionResult {
  std::string reasoning;
  std::string boxed_answer;
  std::string raw;
};

inline bool has_connector(std::string_view text) {
  return std::any_of(prompts::kConnectors.begin(), prompts::kConnectors.end(),
                     [&](std::string_view c) { return text.find(c) != std::string_view::npos; });
}

/// Rewrites the accepted context into one chain and re-checks the answer.
inline std::variant<CohesionResult, Rejection> enhance_cohesion(const ReasoningContext& ctx,
                                                                std::string_view question,
                                                                std::string_view ground_truth, ChatClient& llm,
                                                                const ForgeConfig& cfg) {
  if (ctx.empty() || ctx.entries().back().source != ContextSource::kSummarizerOutput)
    throw ValidationError("context", "cohesion needs a context ending with an accepted summary");
  struct Parsed {
    std::string thought;
    std::string answer;
  };
  auto parsed = detail::ask_parsed<Parsed>(
      llm, render_cohesion_prompt(ctx, question), cfg.temperatures.cohesion, cfg.max_tokens,
      [](const std::string& t) -> std::optional<Parsed> {
        auto fields = parse_dict_reply(t, {"Thought", "Final answer"});
        std::optional<std::string> boxed;
        if (fields) boxed = extract_last_boxed((*fields)[1]);
        if (!boxed) boxed = extract_last_boxed(t);
        if (!fields || !boxed || detail::trim((*fields)[0]).empty()) return std::nullopt;
        return Parsed{(*fields)[0], *boxed};
      });
  if (!parsed) return Rejection{RejectReason::kCohesionParse, "cohesion reply unparseable after reprompt"};
  auto& [p, raw] = *parsed;
  if (!answers_match(p.answer, ground_truth))
    return Rejection{RejectReason::kCohesionDrift,
                     "rewrite answered '" + p.answer + "', expected '" + std::string(ground_truth) + "'"};
  if (cfg.strict_cohesion && !has_connector(p.thought))
    return Rejection{RejectReason::kCohesionConnectors, "rewrite contains no connective phrase"};
  std::string reasoning = detail::trim(p.thought);
  if (!extract_last_boxed(reasoning)) reasoning += "\n\\boxed{" + p.answer + "}";
  return CohesionResult{std::move(reasoning), detail::trim(p.answer), std::move(raw)};
}

// ---------------------------------------------------------------------------
// Per-task and batch drivers

struct ForgeTask {
  std::string question;
  std::string image;
  std::string answer;
};

struct ForgeClients {
  std::shared_ptr<ChatClient> llm;
  std::shared_ptr<ChatClient> vlm;
};

using ForgeOutcome = std::variant<ReasoningSample, Rejection>;

inline ForgeOutcome forge_sample(const ForgeTask& task, const ForgeClients& clients, const ForgeConfig& cfg,
                                 std::string sample_id = "task-0") {
  cfg.validate();
  if (!clients.llm || !clients.vlm) throw ConfigError("forge needs both an LLM and a VLM client");
  ReasoningSample sample;
  sample.sample_id = std::move(sample_id);
  sample.image_ref = task.image;
  sample.question = task.question;
  sample.ground_truth = task.answer;
  sample.provenance = {clients.llm->model(), clients.vlm->model(), cfg.clock(), ""};

  ReasoningContext ctx;
  std::vector<TranscriptMessage> transcript;
  std::optional<int> accepted_round;
  try {
    for (int round = 1; round <= cfg.max_rounds && !accepted_round; ++round) {
      try {
        auto req = request_visual(ctx, task.question, *clients.llm, cfg);
        transcript.push_back({"requester", req.raw});
        auto desc = respond_visual(ctx, req.visual_question, task.image, *clients.vlm, cfg);
        transcript.push_back({"responder", desc});
        auto summary = summarize(ctx, task.question, *clients.llm, cfg);
        if (!answers_match(summary.final_answer, task.answer)) continue;  // discarded
        if (round == 1)
          return Rejection{RejectReason::kNonReflection, "correct answer after the first interaction"};
        ctx.append(ContextSource::kSummarizerOutput, summary.thought + "\nFinal Answer: " + summary.final_answer);
        transcript.push_back({"summarizer", summary.raw});
        accepted_round = round;
      } catch (const RoundError&) {
        continue;
      }
    }
    if (!accepted_round)
      return Rejection{RejectReason::kBudgetExhausted,
                       "no matching answer within " + std::to_string(cfg.max_rounds) + " rounds"};

    auto cohesion = enhance_cohesion(ctx, task.question, task.answer, *clients.llm, cfg);
    if (auto* r = std::get_if<Rejection>(&cohesion)) return *r;
    auto& c = std::get<CohesionResult>(cohesion);
    transcript.push_back({"cohesion", c.raw});
    sample.reasoning = std::move(c.reasoning);
    sample.final_answer = std::move(c.boxed_answer);
  } catch (const TransportError& e) {
    return Rejection{RejectReason::kTransport, e.what()};
  } catch (const RequestError& e) {
    return Rejection{RejectReason::kTransport, e.what()};
  } catch (const ScriptExhausted& e) {
    return Rejection{RejectReason::kTransport, e.what()};
  }
  sample.rounds = *accepted_round;
  sample.transcript = std::move(transcript);
  sample.provenance.finished_at = cfg.clock();
  return sample;
}

struct BatchSummary {
  std::size_t tasks = 0;
  std::size_t written = 0;
  std::map<std::string, std::size_t> rejections;

  std::size_t count(RejectReason r) const {
    auto it = rejections.find(to_string(r));
    return it == rejections.end() ? 0 : it->second;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json rej = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rejections) rej[k] = v;
    return {{"tasks", tasks}, {"written", written}, {"rejections", std::move(rej)}};
  }
};

using ClientFactory = std::function<ForgeClients(std::size_t index, const ForgeTask& task)>;

/// Reads {"question", "image", "answer"} JSON Lines.
inline std::vector<ForgeTask> read_tasks(std::istream& in) {
  std::vector<ForgeTask> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    const auto where = "tasks line " + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object()) throw ValidationError(where, "not a JSON object");
    ForgeTask t;
    for (auto [key, dst] : {std::pair{"question", &t.question}, {"image", &t.image}, {"answer", &t.answer}}) {
      if (!j.contains(key) || !j[key].is_string()) throw ValidationError(where + "." + key, "missing string field");
      *dst = j[key].get<std::string>();
    }
    if (normalize_answer(t.answer).empty()) throw ValidationError(where + ".answer", "empty answer");
    tasks.push_back(std::move(t));
  }
  return tasks;
}

/// Runs forge_sample over `tasks` with up to cfg.concurrency workers and
/// appends surviving samples to `out` as JSON Lines. On a write failure the
/// run stops, `<output_path>.partial` is created, and IoError is thrown.
inline BatchSummary forge_batch(const std::vector<ForgeTask>& tasks, const ClientFactory& factory,
                                const ForgeConfig& cfg, std::ostream& out) {
  cfg.validate();
  BatchSummary summary;
  summary.tasks = tasks.size();
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> io_failed{false};
  std::exception_ptr worker_error;

  auto worker = [&] {
    while (!io_failed) {
      const auto i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      ForgeOutcome outcome;
      try {
        outcome = forge_sample(tasks[i], factory(i, tasks[i]), cfg, "task-" + std::to_string(i));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!worker_error) worker_error = std::current_exception();
        io_failed = true;
        return;
      }
      std::lock_guard lock(mu);
      if (auto* s = std::get_if<ReasoningSample>(&outcome)) {
        out << write_sample_line(*s) << '\n';
        out.flush();
        if (!out) {
          io_failed = true;
          return;
        }
        ++summary.written;
      } else {
        ++summary.rejections[to_string(std::get<Rejection>(outcome).reason)];
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), tasks.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (worker_error) std::rethrow_exception(worker_error);
  if (io_failed) {
    std::ofstream marker(cfg.output_path + ".partial");
    marker << "forge aborted after " << summary.written << " samples: write failure\n";
    throw IoError("write failure on '" + cfg.output_path + "'; partial output marked");
  }
  return summary;
}

/// Convenience overload appending to cfg.output_path.
inline BatchSummary forge_batch(const std::vector<ForgeTask>& tasks, const ClientFactory& factory,
                                const ForgeConfig& cfg) {
  std::ofstream out(cfg.output_path, std::ios::app);
  if (!out) {
    std::ofstream marker(cfg.output_path + ".partial");
    marker << "forge aborted: cannot open output\n";
    throw IoError("cannot open '" + cfg.output_path + "' for writing");
  }
  return forge_batch(tasks, factory, cfg, out);
}

}  // namespace vizref
