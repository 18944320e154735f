// vizref: command-line front end for trace analysis, reward scoring, the
// reward service, synthetic traces, and reasoning-data forging.
//
// Exit codes: 0 success, 2 usage/config/invalid input, 3 transport,
// 4 degenerate input.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vizref/config.hpp"
#include "vizref/forge.hpp"
#include "vizref/http_gateway.hpp"
#include "vizref/metrics.hpp"
#include "vizref/reward.hpp"
#include "vizref/service.hpp"
#include "vizref/synth.hpp"
#include "vizref/trace.hpp"

namespace fs = std::filesystem;
using namespace vizref;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTransport = 3;
constexpr int kExitDegenerate = 4;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void report(const Error& e) { std::cerr << e.kind() << ": " << e.what() << '\n'; }

AppConfig config_or_default(const std::string& path) {
  return path.empty() ? AppConfig{} : load_config(path);
}

std::vector<fs::path> trace_files(const std::string& dir_or_file) {
  std::vector<fs::path> out;
  if (fs::is_directory(dir_or_file)) {
    for (const auto& e : fs::directory_iterator(dir_or_file))
      if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else {
    out.emplace_back(dir_or_file);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string trace, response, answer, config;
  std::optional<double> lambda_v, lambda_f;
};

int cmd_score(const ScoreArgs& a) {
  try {
    const auto cfg = config_or_default(a.config);
    const auto trace = read_trace(slurp(a.trace));
    const auto response = slurp(a.response);
    const auto b = score_rollout(response, a.answer, trace, a.lambda_v.value_or(cfg.reward.lambda_v),
                                 a.lambda_f.value_or(cfg.reward.lambda_f), {cfg.reward.r_v_cap});
    std::cout << breakdown_to_json(b).dump() << '\n';
    return kExitOk;
  } catch (const DegenerateAttention& e) {
    report(e);
    return kExitDegenerate;
  } catch (const DegenerateHalf& e) {
    report(e);
    return kExitDegenerate;
  } catch (const Error& e) {
    report(e);
    return kExitUsage;
  }
}

struct AnalyzeArgs {
  std::string traces, metric = "attn", layers = "all", out, config;
  std::optional<std::int64_t> bucket;
  std::optional<std::size_t> bootstrap;
  std::optional<double> level;
  std::optional<std::uint64_t> seed;
};

int cmd_analyze(const AnalyzeArgs& a) {
  try {
    const auto cfg = config_or_default(a.config);
    if (a.metric != "attn" && a.metric != "vdm") throw ValidationError("metric", "must be 'attn' or 'vdm'");
    const auto metric = a.metric == "attn" ? Metric::kAttnVisual : Metric::kVdm;
    const auto layers = LayerSelection::parse(a.layers);
    const auto bucket = a.bucket.value_or(cfg.analyze.bucket_size);

    if (!fs::exists(a.traces)) throw ConfigError("no such path '" + a.traces + "'");
    std::vector<AttentionTrace> traces;
    for (const auto& p : trace_files(a.traces)) {
      try {
        traces.push_back(read_trace(slurp(p.string())));
      } catch (const Error& e) {
        std::cerr << "skipping " << p.string() << ": " << e.kind() << ": " << e.what() << '\n';
      }
    }
    if (traces.empty()) throw EmptyInput("no valid traces under '" + a.traces + "'");

    BootstrapOptions boot{a.bootstrap.value_or(cfg.analyze.bootstrap_resamples), a.level.value_or(cfg.analyze.ci_level)};
    std::mt19937_64 rng(a.seed.value_or(cfg.analyze.seed));
    const auto curve = boot.resamples == 0 ? decay_curve(traces, metric, layers, bucket)
                                           : decay_curve(traces, metric, layers, bucket, boot, rng);
    if (!a.out.empty()) {
      std::ofstream out(a.out, std::ios::binary);
      out << export_curve_csv(curve);
      if (!out) throw ConfigError("cannot write '" + a.out + "'");
    }
    const double first = curve.mean.front(), last = curve.mean.back();
    nlohmann::ordered_json summary{{"traces", traces.size()},
                                   {"buckets", curve.size()},
                                   {"first_bucket_mean", first},
                                   {"last_bucket_mean", last},
                                   {"ratio", last / first},
                                   {"skipped_steps", curve.skipped_steps}};
    std::cout << summary.dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    report(e);
    return kExitUsage;
  }
}

struct SynthArgs {
  std::string profile = "exponential", out, spikes;
  double initial = 0.4, rate = 0.0, spike_height = 0.35, noise = 0.0;
  std::optional<double> target_ratio;
  std::int64_t target_n = 300;
  std::int64_t count = 1, len = 300, layers = 2, visual = 8;
  std::optional<std::int64_t> len_min, len_max;
  std::uint64_t seed = 0;
  bool no_distributions = false;
};

int cmd_synth(const SynthArgs& a) {
  try {
    if (a.count < 1) throw ValidationError("count", "must be >= 1");
    if (a.out.empty()) throw ValidationError("out", "output directory required");
    double rate = a.rate;
    if (a.target_ratio) rate = DecayProfile::exponential_to(a.initial, *a.target_ratio, a.target_n).rate;
    DecayProfile profile;
    if (a.profile == "constant") {
      profile = DecayProfile::constant(a.initial);
    } else if (a.profile == "exponential") {
      profile = DecayProfile::exponential(a.initial, rate);
    } else if (a.profile == "reflective") {
      std::vector<std::int64_t> spikes;
      if (!a.spikes.empty()) spikes = LayerSelection::parse(a.spikes).layer_ids;
      profile = DecayProfile::reflective(a.initial, rate, spikes, a.spike_height);
    } else {
      throw ValidationError("profile", "must be constant, exponential or reflective");
    }
    profile.check();

    TraceShape shape;
    shape.num_layers = a.layers;
    shape.num_visual_tokens = a.visual;
    shape.noise = a.noise;
    shape.with_distributions = !a.no_distributions;
    LengthDistribution lengths{a.len_min.value_or(a.len), a.len_max.value_or(a.len_min.value_or(a.len))};
    const auto fleet = generate_fleet(profile, static_cast<std::size_t>(a.count), lengths, shape, a.seed);

    fs::create_directories(a.out);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "trace_%05zu.json", i);
      std::ofstream f(fs::path(a.out) / name, std::ios::binary);
      f << write_trace(fleet[i]) << '\n';
      if (!f) throw ConfigError("cannot write into '" + a.out + "'");
    }
    std::cout << nlohmann::ordered_json{{"written", fleet.size()}, {"out", a.out}, {"profile", to_string(profile.kind)}}.dump()
              << '\n';
    return kExitOk;
  } catch (const Error& e) {
    report(e);
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "IoError: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_validate(const std::vector<std::string>& paths) {
  std::size_t valid = 0;
  auto errors = nlohmann::ordered_json::array();
  for (const auto& root : paths) {
    if (!fs::exists(root)) {
      std::cerr << root << ": no such file or directory\n";
      errors.push_back({{"path", root}, {"error", "NotFound"}, {"detail", "no such file or directory"}});
      continue;
    }
    for (const auto& p : trace_files(root)) {
      try {
        read_trace(slurp(p.string()));
        ++valid;
      } catch (const Error& e) {
        std::cerr << p.string() << ": " << e.kind() << ": " << e.what() << '\n';
        errors.push_back({{"path", p.string()}, {"error", e.kind()}, {"detail", e.what()}});
      }
    }
  }
  std::cout << nlohmann::ordered_json{{"valid", valid}, {"invalid", errors.size()}, {"errors", errors}}.dump() << '\n';
  return errors.empty() ? kExitOk : kExitUsage;
}

struct ForgeArgs {
  std::string tasks, config, out, mock_transcript;
  std::optional<int> concurrency;
};

int cmd_forge(const ForgeArgs& a) {
  try {
    auto cfg = config_or_default(a.config);
    if (!a.out.empty()) cfg.forge.output_path = a.out;
    if (a.concurrency) cfg.forge.concurrency = *a.concurrency;
    cfg.validate();

    std::ifstream tin(a.tasks);
    if (!tin) throw ConfigError("cannot read tasks '" + a.tasks + "'");
    const auto tasks = read_tasks(tin);

    ClientFactory factory;
    if (!a.mock_transcript.empty()) {
      auto doc = nlohmann::json::parse(slurp(a.mock_transcript), nullptr, false);
      if (doc.is_discarded() || !doc.contains("tasks") || !doc["tasks"].is_array())
        throw ConfigError("mock transcript must be {\"tasks\": [{\"llm\": [...], \"vlm\": [...]}, ...]}");
      if (doc["tasks"].size() < tasks.size())
        throw ConfigError("mock transcript has fewer entries than tasks");
      std::vector<std::pair<std::vector<ScriptEntry>, std::vector<ScriptEntry>>> scripts;
      for (std::size_t i = 0; i < doc["tasks"].size(); ++i) {
        const auto& t = doc["tasks"][i];
        const auto base = "tasks[" + std::to_string(i) + "]";
        if (!t.is_object() || !t.contains("llm") || !t.contains("vlm"))
          throw ConfigError("mock transcript " + base + " needs \"llm\" and \"vlm\" arrays");
        scripts.emplace_back(parse_script(t["llm"], base + ".llm"), parse_script(t["vlm"], base + ".vlm"));
      }
      const auto retry = cfg.retry;
      factory = [scripts, retry](std::size_t i, const ForgeTask&) {
        return ForgeClients{mock_script(scripts[i].first, "mock-llm", retry),
                            mock_script(scripts[i].second, "mock-vlm", retry)};
      };
      cfg.forge.clock = [] { return std::string("1970-01-01T00:00:00Z"); };
    } else {
      resolve_credentials(cfg);
      auto llm = make_http_client(cfg.llm, cfg.retry);
      auto vlm = make_http_client(cfg.vlm, cfg.retry);
      factory = [llm, vlm](std::size_t, const ForgeTask&) { return ForgeClients{llm, vlm}; };
    }

    const auto summary = forge_batch(tasks, factory, cfg.forge);
    std::cout << summary.to_json().dump() << '\n';
    return summary.count(RejectReason::kTransport) > 0 ? kExitTransport : kExitOk;
  } catch (const IoError& e) {
    report(e);
    return 1;
  } catch (const Error& e) {
    report(e);
    return kExitUsage;
  }
}

int cmd_serve(const std::string& config, std::optional<int> port, std::optional<std::string> host) {
  try {
    auto cfg = config_or_default(config);
    if (port) cfg.service.port = *port;
    if (host) cfg.service.host = *host;
    cfg.validate();
    RewardServer server(cfg.reward);
    std::cerr << "reward service listening on " << cfg.service.host << ':' << cfg.service.port << '\n';
    if (!server.listen(cfg.service.host, cfg.service.port)) {
      std::cerr << "ConfigError: cannot bind " << cfg.service.host << ':' << cfg.service.port << '\n';
      return kExitUsage;
    }
    return kExitOk;
  } catch (const Error& e) {
    report(e);
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-attention metrics, rollout rewards and reflection-data forging"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score one rollout (prints the reward breakdown as JSON)");
  s->add_option("--trace", score.trace, "Attention trace JSON")->required();
  s->add_option("--response", score.response, "File holding the response text")->required();
  s->add_option("--answer", score.answer, "Ground-truth answer")->required();
  s->add_option("--lambda-v", score.lambda_v, "Visual-attention reward weight");
  s->add_option("--lambda-f", score.lambda_f, "Format reward weight");
  s->add_option("--config", score.config, "Config file");

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Aggregate a metric into a position-bucketed decay curve");
  an->add_option("--traces", analyze.traces, "Directory of trace JSON files")->required();
  an->add_option("--metric", analyze.metric, "attn or vdm");
  an->add_option("--layers", analyze.layers, "all, last, or comma-separated layer ids");
  an->add_option("--bucket", analyze.bucket, "Bucket size in response positions");
  an->add_option("--out", analyze.out, "CSV output path");
  an->add_option("--bootstrap", analyze.bootstrap, "Bootstrap resamples (0 disables the band)");
  an->add_option("--level", analyze.level, "Confidence level");
  an->add_option("--seed", analyze.seed, "Bootstrap seed");
  an->add_option("--config", analyze.config, "Config file");

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Write synthetic traces with a known decay profile");
  sy->add_option("--profile", synth.profile, "constant, exponential or reflective");
  sy->add_option("--initial", synth.initial, "Initial (or constant) attention level");
  sy->add_option("--rate", synth.rate, "Exponential decay rate per position");
  sy->add_option("--target-ratio", synth.target_ratio, "Choose the rate so value(target-n)/initial equals this");
  sy->add_option("--target-n", synth.target_n, "Position for --target-ratio");
  sy->add_option("--spikes", synth.spikes, "Comma-separated spike positions (reflective)");
  sy->add_option("--spike-height", synth.spike_height, "Spike attention level");
  sy->add_option("--count", synth.count, "Number of traces");
  sy->add_option("--len", synth.len, "Response length");
  sy->add_option("--len-min", synth.len_min, "Minimum response length");
  sy->add_option("--len-max", synth.len_max, "Maximum response length");
  sy->add_option("--layers", synth.layers, "Recorded layers");
  sy->add_option("--visual-tokens", synth.visual, "Visual tokens");
  sy->add_option("--noise", synth.noise, "Multiplicative noise amplitude in [0,1)");
  sy->add_flag("--no-distributions", synth.no_distributions, "Omit distribution pairs");
  sy->add_option("--seed", synth.seed, "Seed");
  sy->add_option("--out", synth.out, "Output directory")->required();

  std::vector<std::string> validate_paths;
  auto* va = app.add_subcommand("validate", "Validate trace files or directories");
  va->add_option("paths", validate_paths, "Trace files or directories")->required();

  ForgeArgs forge;
  auto* fo = app.add_subcommand("forge", "Construct reflection reasoning samples");
  fo->add_option("--tasks", forge.tasks, "Tasks JSON Lines file")->required();
  fo->add_option("--config", forge.config, "Config file");
  fo->add_option("--out", forge.out, "Output JSON Lines path");
  fo->add_option("--mock-transcript", forge.mock_transcript, "Scripted replies instead of live endpoints");
  fo->add_option("--concurrency", forge.concurrency, "Parallel tasks");

  std::string serve_config;
  std::optional<int> serve_port;
  std::optional<std::string> serve_host;
  auto* se = app.add_subcommand("serve", "Run the reward HTTP service");
  se->add_option("--config", serve_config, "Config file");
  se->add_option("--port", serve_port, "Port");
  se->add_option("--host", serve_host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*s) return cmd_score(score);
  if (*an) return cmd_analyze(analyze);
  if (*sy) return cmd_synth(synth);
  if (*va) return cmd_validate(validate_paths);
  if (*fo) return cmd_forge(forge);
  if (*se) return cmd_serve(serve_config, serve_port, serve_host);
  return kExitUsage;
}
