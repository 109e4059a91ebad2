/* Copyright 2026 The streamctl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "commands.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "streamctl/config_space.h"
#include "streamctl/context.h"
#include "streamctl/controller.h"
#include "streamctl/eval.h"
#include "streamctl/harness.h"
#include "streamctl/perception.h"
#include "streamctl/rewards.h"
#include "streamctl/scheduler.h"
#include "streamctl/stream.h"
#include "streamctl/training.h"
#include "streamctl/util.h"

namespace fs = std::filesystem;

namespace streamctl::cli {
namespace {

constexpr const char* kRunFormat = "streamctl-run";
constexpr const char* kManifestName = "manifest.json";

// Tracks what a command read and wrote so that the manifest can pin it.
class RunRecord {
 public:
  RunRecord(std::string command, std::vector<std::string> args, std::string out_dir)
      : command_(std::move(command)), args_(std::move(args)), out_dir_(std::move(out_dir)) {
    if (out_dir_.empty()) throw Error("usage", command_ + ": --out-dir is required");
    fs::create_directories(out_dir_);
  }

  const std::string& Input(const std::string& path) {
    if (!path.empty()) inputs_[path] = HashFile(path);
    return path;
  }
  std::string Output(const std::string& name) {
    outputs_.push_back(name);
    return (fs::path(out_dir_) / name).string();
  }
  void Config(const std::string& key, Json value) { config_[key] = std::move(value); }

  void Finish() const {
    Json outputs = Json::object();
    for (const std::string& name : outputs_) outputs[name] = HashFile((fs::path(out_dir_) / name).string());
    Json inputs = Json::object();
    for (const auto& [path, hash] : inputs_) inputs[path] = hash;
    const Json manifest{{"tool", "streamctl"},  {"manifest_version", 1},
                        {"command", command_},  {"args", args_},
                        {"cwd", fs::current_path().string()},
                        {"out_dir", out_dir_},  {"inputs", inputs},
                        {"outputs", outputs},   {"config", config_.is_null() ? Json::object() : config_}};
    WriteJsonFile((fs::path(out_dir_) / kManifestName).string(), manifest);
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::string out_dir_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  Json config_;
};

// Paths shared by the commands that simulate streams.
struct WorldPaths {
  std::string space, profile, gt, detections;
};

void AddWorldOptions(CLI::App* cmd, WorldPaths& p, bool need_detections = true) {
  cmd->add_option("--space", p.space, "Decision space JSON")->required();
  cmd->add_option("--profile", p.profile, "Runtime profile JSON")->required();
  cmd->add_option("--gt", p.gt, "Ground-truth JSONL")->required();
  auto* det = cmd->add_option("--detections", p.detections, "Detection trace JSONL");
  if (need_detections) det->required();
}

// Loaded inputs; members are referenced by the environment so the struct is
// never moved once built.
struct World {
  DecisionSpace space;
  RuntimeProfile profile;
  Corpus corpus;
  std::unique_ptr<DetectionTrace> trace;
  ContextLayout layout;
  SwitchabilityThresholds thresholds;
  std::unique_ptr<ContextBuilder> context;

  Environment env() const { return {space, profile, *trace, *context}; }

  // Context from a checkpoint, or derived from this corpus.
  void BuildContext(const Json* run) {
    if (run != nullptr) {
      layout = ContextLayout::FromJson(run->at("layout"));
      thresholds = SwitchabilityThresholds::FromJson(run->at("thresholds"));
    } else {
      layout.categories = corpus.categories;
      layout.max_contention = profile.max_level();
      thresholds = SwitchabilityThresholds::Calibrate(CollectSwitchabilitySpreads(corpus, *trace, space));
    }
    context = std::make_unique<ContextBuilder>(layout, space, *trace, thresholds);
  }
};

std::unique_ptr<World> LoadWorld(const WorldPaths& p, RunRecord& run) {
  auto w = std::make_unique<World>();
  w->space = DecisionSpace::FromJson(ReadJsonFile(run.Input(p.space)));
  w->profile = RuntimeProfile::FromJson(ReadJsonFile(run.Input(p.profile)), w->space);
  w->corpus = ReadCorpusJsonl(run.Input(p.gt));
  if (!p.detections.empty()) {
    w->trace = std::make_unique<DetectionTrace>(DetectionTrace::Load(run.Input(p.detections), w->space));
    w->trace->ValidateCoverage(w->corpus);
  }
  return w;
}

std::vector<int> ParseLevels(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error("usage", "bad contention level '" + item + "'");
    }
    if (out.back() < 0) throw Error("usage", "contention levels must be >= 0");
  }
  if (out.empty()) throw Error("usage", "no contention levels given");
  return out;
}

std::vector<PredictionRecord> StreamFor(const PredictionStreams& streams, const std::string& seq) {
  for (const auto& [id, records] : streams) {
    if (id == seq) return records;
  }
  return {};
}

PredictionStreams NamedStreams(const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams) {
  PredictionStreams out;
  for (size_t i = 0; i < corpus.sequences.size(); ++i) out.emplace_back(corpus.sequences[i].id, streams[i]);
  return out;
}

std::string MismatchTable(const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams) {
  std::ostringstream out;
  out << "seq,frame,mismatch\n";
  for (size_t i = 0; i < corpus.sequences.size(); ++i) {
    const Sequence& s = corpus.sequences[i];
    for (const auto& [frame, m] : TemporalMismatch(streams[i], s.frames, s.frame_period)) {
      out << s.id << ',' << frame << ',' << m << '\n';
    }
  }
  return out.str();
}

double MeanMismatch(const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < corpus.sequences.size(); ++i) {
    const Sequence& s = corpus.sequences[i];
    for (const auto& [frame, m] : TemporalMismatch(streams[i], s.frames, s.frame_period)) {
      sum += m;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void WriteReport(RunRecord& run, const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams) {
  const EvalReport report = EvaluateRuns(corpus, streams);
  Json j = report.ToJson();
  j["mean_mismatch"] = MeanMismatch(corpus, streams);
  j["sequences"] = corpus.sequences.size();
  WriteJsonFile(run.Output("report.json"), j);
  WriteFile(run.Output("report.csv"), report.ToCsv());
  WriteFile(run.Output("mismatch.csv"), MismatchTable(corpus, streams));
  std::cout << j.dump() << "\n";
}

// Reads the wrapper written by `train`.
Json LoadRun(const std::string& path, RunRecord& run, const DecisionSpace& space) {
  Json j = ReadJsonFile(run.Input(path));
  if (j.value("format", std::string()) != kRunFormat) throw Error("schema", path + ": not a training checkpoint");
  if (DecisionSpace::FromJson(j.at("space")).ToJson() != space.ToJson()) {
    throw Error("schema", path + ": checkpoint was trained on a different decision space");
  }
  return j;
}

Json MakeRun(const Controller& c, const World& w, const TrainingConfig& cfg, int epoch) {
  return Json{{"format", kRunFormat},
              {"version", 1},
              {"epoch", epoch},
              {"space", w.space.ToJson()},
              {"layout", w.layout.ToJson()},
              {"thresholds", w.thresholds.ToJson()},
              {"training", cfg.ToJson(w.space)},
              {"controller", c.Checkpoint()}};
}

// ---------------------------------------------------------------- gen-trace

// Profile from a full table or from a curve:
//   base(a) = intercept_s + sum_d per_index_s[d] * a[d]
//   latency(a, l) = base(a) * (1 + alpha * l^gamma)
RuntimeProfile ProfileFromConfig(const Json& j, const DecisionSpace& space) {
  if (j.contains("entries")) return RuntimeProfile::FromJson(j, space);
  const double intercept = j.at("intercept_s").get<double>();
  std::vector<double> per_index(space.dimension_count(), 0.0);
  if (j.contains("per_index_s")) {
    for (const auto& [name, v] : j["per_index_s"].items()) {
      const auto d = space.Find(name);
      if (!d) throw Error("schema", "profile curve names unknown dimension '" + name + "'");
      per_index[*d] = v.get<double>();
    }
  }
  RuntimeProfile p = RuntimeProfile::FromCurve(
      j.value("device", std::string("synthetic")), space,
      [&](const Action& a) {
        double s = intercept;
        for (size_t d = 0; d < a.index.size(); ++d) s += per_index[d] * a.index[d];
        return s;
      },
      j.value("alpha", 0.0), j.value("gamma", 1.0), j.value("max_level", 0));
  if (j.contains("tracker_cost_fraction")) p.set_tracker_cost_fraction(j["tracker_cost_fraction"].get<double>());
  return p;
}

int GenTrace(const std::string& config_path, std::optional<uint64_t> seed_override, RunRecord& run) {
  const Json cfg = ReadJsonFile(run.Input(config_path));
  const uint64_t seed = seed_override.value_or(cfg.value("seed", uint64_t{0}));
  const DecisionSpace space = DecisionSpace::FromJson(cfg.at("space"));
  const DegradationModel model = DegradationModel::FromJson(cfg.value("degradation", Json::object()));
  const RuntimeProfile profile = ProfileFromConfig(cfg.at("profile"), space);

  Corpus train, test;
  for (const Json& r : cfg.at("regimes")) {
    const std::string prefix = r.at("prefix").get<std::string>();
    const SceneSpec scene = SceneSpec::FromJson(r.value("scene", Json::object()));
    const int n_train = r.value("train", 0), n_test = r.value("test", 0);
    if (n_train < 0 || n_test < 0) throw Error("schema", "regime '" + prefix + "': negative sequence count");
    for (int i = 0; i < n_train; ++i) {
      train.sequences.push_back(GenerateSequence(scene, prefix + "-train-" + std::to_string(i), seed));
    }
    for (int i = 0; i < n_test; ++i) {
      test.sequences.push_back(GenerateSequence(scene, prefix + "-test-" + std::to_string(i), seed));
    }
  }
  train.RebuildCategories();
  test.RebuildCategories();

  const SyntheticSource source(space, model, MixSeed({seed, 1}));
  Corpus all = train;
  all.sequences.insert(all.sequences.end(), test.sequences.begin(), test.sequences.end());
  const DetectionTrace trace = DetectionTrace::Record(all, source, space);

  WriteJsonFile(run.Output("space.json"), space.ToJson());
  WriteJsonFile(run.Output("profile.json"), profile.ToJson());
  WriteJsonFile(run.Output("degradation.json"), model.ToJson());
  WriteCorpusJsonl(run.Output("train.jsonl"), train);
  WriteCorpusJsonl(run.Output("test.jsonl"), test);
  trace.Save(run.Output("detections.jsonl"));
  run.Config("seed", seed);
  run.Config("generator", cfg);
  std::cout << Json{{"train_sequences", train.sequences.size()}, {"test_sequences", test.sequences.size()}}.dump()
            << "\n";
  return 0;
}

// ----------------------------------------------------------- shared options

struct TrainingFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> reward, scheduler, policy;
  std::optional<double> p;
};

void AddTrainingFlags(CLI::App* cmd, TrainingFlags& f) {
  cmd->add_option("--config", f.config, "Training config JSON");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--scheduler", f.scheduler, "idle-free | shrinking-tail");
  cmd->add_option("--policy", f.policy, "Fixed policy, e.g. scale=720,proposals=8");
}

TrainingConfig ResolveTraining(const TrainingFlags& f, const DecisionSpace& space, RunRecord& run,
                               const Json* base = nullptr) {
  Json j = base ? *base : Json::object();
  if (!f.config.empty()) j.update(ReadJsonFile(run.Input(f.config)));
  TrainingConfig cfg = TrainingConfig::FromJson(j, space);
  if (f.seed) cfg.seed = *f.seed;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.p) cfg.p = *f.p;
  if (f.reward) cfg.reward = ParseRewardMode(*f.reward);
  if (f.scheduler) cfg.scheduler = ParseSchedulerPolicy(*f.scheduler);
  if (f.policy) cfg.fixed_policy = space.Parse(*f.policy);
  cfg.Validate();
  return cfg;
}

StaticRunOptions StaticOptions(const TrainingConfig& cfg, int level) {
  StaticRunOptions o;
  o.schedule.policy = cfg.scheduler;
  o.schedule.contention = ContentionSchedule::Constant(level);
  o.schedule.forecast_output = cfg.forecast_output;
  o.sim = cfg.sim;
  return o;
}

// ------------------------------------------------------------------ prefetch

int Prefetch(const WorldPaths& paths, const TrainingFlags& flags, RunRecord& run) {
  auto w = LoadWorld(paths, run);
  w->BuildContext(nullptr);
  const TrainingConfig cfg = ResolveTraining(flags, w->space, run);
  const FixedPolicyCache cache = PrefetchFixedPolicy(w->corpus, w->env(), cfg);
  const std::string out = run.Output("fixed_policy.jsonl");
  cache.Save(out, w->space);
  run.Output("fixed_policy.jsonl.policy.json");
  run.Config("training", cfg.ToJson(w->space));
  std::cout << Json{{"streams", cache.size()}, {"policy", w->space.ActionToJson(cache.policy())}}.dump() << "\n";
  return 0;
}

// -------------------------------------------------------------- bench-static

int BenchStatic(const WorldPaths& paths, const TrainingFlags& flags, int level, RunRecord& run) {
  auto w = LoadWorld(paths, run);
  const TrainingConfig cfg = ResolveTraining(flags, w->space, run);
  const auto rows = BenchmarkStatic(w->corpus, w->space, w->profile, *w->trace, StaticOptions(cfg, level));
  WriteFile(run.Output("bench.csv"), BenchmarkCsv(rows, w->space));
  const BenchmarkRow& best = BestBySap(rows);
  const auto best_map = std::max_element(rows.begin(), rows.end(),
                                         [](const BenchmarkRow& a, const BenchmarkRow& b) { return a.map < b.map; });
  const Json summary{{"cells", rows.size()},
                     {"level", level},
                     {"best_sap", {{"action", w->space.ActionToJson(best.action)}, {"sAP", best.sap}}},
                     {"best_map", {{"action", w->space.ActionToJson(best_map->action)}, {"mAP", best_map->map}}}};
  WriteJsonFile(run.Output("best.json"), summary);
  run.Config("training", cfg.ToJson(w->space));
  std::cout << summary.dump() << "\n";
  return 0;
}

// --------------------------------------------------------------------- train

struct ControllerFlags {
  std::string config;
  std::optional<double> lr, epsilon_min;
  std::optional<std::string> strategy;
};

int TrainCommand(const WorldPaths& paths, const TrainingFlags& tflags, const ControllerFlags& cflags,
                 const std::string& fixed_cache, RunRecord& run) {
  auto w = LoadWorld(paths, run);
  w->BuildContext(nullptr);
  const TrainingConfig cfg = ResolveTraining(tflags, w->space, run);

  ControllerConfig ccfg;
  if (!cflags.config.empty()) ccfg = ControllerConfig::FromJson(ReadJsonFile(run.Input(cflags.config)));
  if (tflags.seed) ccfg.seed = *tflags.seed;
  if (cflags.lr) ccfg.learning_rate = *cflags.lr;
  if (cflags.epsilon_min) ccfg.exploration.epsilon_min = *cflags.epsilon_min;
  if (cflags.strategy) ccfg.exploration.strategy = ParseStrategy(*cflags.strategy);
  Controller controller(w->space, w->layout.size(), ccfg);

  std::optional<FixedPolicyCache> cache;
  if (cfg.reward == RewardMode::kR2) {
    if (!fixed_cache.empty()) {
      cache = FixedPolicyCache::Load(run.Input(fixed_cache), w->space);
      run.Input(fixed_cache + ".policy.json");
      if (cache->policy() != cfg.FixedPolicy(w->space)) {
        throw Error("schema", fixed_cache + ": cached policy differs from the configured fixed policy");
      }
    } else {
      cache = PrefetchFixedPolicy(w->corpus, w->env(), cfg);
    }
  }

  const TrainingLog log = Train(w->corpus, controller, w->env(), cfg, cache ? &*cache : nullptr,
                                [&](int epoch, const Controller& c) {
                                  WriteJsonFile(run.Output("checkpoint-epoch-" + std::to_string(epoch) + ".json"),
                                                MakeRun(c, *w, cfg, epoch));
                                });
  WriteJsonFile(run.Output("checkpoint.json"), MakeRun(controller, *w, cfg, cfg.epochs));
  WriteFile(run.Output("training_log.csv"), log.ToCsv());
  run.Config("training", cfg.ToJson(w->space));
  run.Config("controller", ccfg.ToJson());
  run.Config("layout", w->layout.ToJson());
  run.Config("layout_fields", w->layout.FieldNames());
  run.Config("thresholds", w->thresholds.ToJson());
  run.Config("profile_hash", HashFile(paths.profile));
  Json summary{{"epochs", log.epochs.size()}, {"total_sim_time_s", log.total_sim_time_s}};
  if (!log.epochs.empty()) summary["final_mean_reward"] = log.epochs.back().mean_reward;
  std::cout << summary.dump() << "\n";
  return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvalFlags {
  std::string predictions, checkpoint, baseline;
  std::optional<int> level;
};

std::vector<Json> DecisionRows(const Corpus& corpus, const std::vector<SequenceRun>& runs, const DecisionSpace& space) {
  std::vector<Json> rows;
  for (size_t i = 0; i < runs.size(); ++i) {
    for (const DecisionRecord& d : runs[i].decisions) {
      rows.push_back({{"seq", corpus.sequences[i].id},
                      {"t", d.t},
                      {"frame", d.frame},
                      {"sensed_level", d.sensed_level},
                      {"action", space.ActionToJson(d.a)},
                      {"z", d.z}});
    }
  }
  return rows;
}

int Evaluate(const WorldPaths& paths, const TrainingFlags& tflags, const EvalFlags& e, RunRecord& run) {
  const int modes = !e.predictions.empty() + !e.checkpoint.empty() + !e.baseline.empty() + tflags.policy.has_value();
  if (modes != 1) {
    throw Error("usage", "evaluate needs exactly one of --predictions, --checkpoint, --policy, --baseline");
  }
  if (!e.predictions.empty()) {
    const Corpus corpus = ReadCorpusJsonl(run.Input(paths.gt));
    const PredictionStreams streams = ReadPredictionsJsonl(run.Input(e.predictions));
    std::vector<std::vector<PredictionRecord>> ordered;
    for (const Sequence& s : corpus.sequences) ordered.push_back(StreamFor(streams, s.id));
    WriteReport(run, corpus, ordered);
    return 0;
  }
  if (paths.detections.empty()) throw Error("usage", "evaluate: --detections is required to simulate runs");
  auto w = LoadWorld(paths, run);
  std::optional<Json> ckpt;
  if (!e.checkpoint.empty()) ckpt = LoadRun(e.checkpoint, run, w->space);
  const Json training = ckpt ? ckpt->at("training") : Json::object();
  TrainingConfig cfg = ResolveTraining(tflags, w->space, run, ckpt ? &training : nullptr);
  if (e.level) {
    cfg.contention.kind = ContentionPlan::Kind::kSchedule;
    cfg.contention.schedule = ContentionSchedule::Constant(*e.level);
  }
  const int level = e.level.value_or(0);

  std::vector<std::vector<PredictionRecord>> streams;
  if (ckpt) {
    w->BuildContext(&*ckpt);
    Controller controller = Controller::FromCheckpoint(ckpt->at("controller"), w->space);
    const std::vector<SequenceRun> runs = EvaluateController(w->corpus, controller, w->env(), cfg);
    for (const SequenceRun& r : runs) streams.push_back(r.schedule.records);
    WriteJsonLines(run.Output("decisions.jsonl"), DecisionRows(w->corpus, runs, w->space));
  } else if (tflags.policy) {
    streams = RunStatic(w->corpus, w->space, w->profile, *w->trace, cfg.FixedPolicy(w->space),
                        StaticOptions(cfg, level));
  } else if (e.baseline == "adaptive-scale") {
    for (const Sequence& s : w->corpus.sequences) {
      streams.push_back(RunAdaptiveScaleBaseline(s, w->space, w->profile, *w->trace, cfg.FixedPolicy(w->space),
                                                 StaticOptions(cfg, level)));
    }
  } else {
    throw Error("usage", "unknown baseline '" + e.baseline + "' (adaptive-scale)");
  }
  WritePredictionsJsonl(run.Output("predictions.jsonl"), NamedStreams(w->corpus, streams), &w->space);
  run.Config("training", cfg.ToJson(w->space));
  WriteReport(run, w->corpus, streams);
  return 0;
}

// ---------------------------------------------------------- sweep-contention

int SweepContention(const WorldPaths& paths, const TrainingFlags& tflags, const std::string& checkpoint,
                    const std::string& levels_text, const std::vector<std::string>& statics_text, RunRecord& run) {
  auto w = LoadWorld(paths, run);
  const Json ckpt = LoadRun(checkpoint, run, w->space);
  w->BuildContext(&ckpt);
  const Json training = ckpt.at("training");
  const TrainingConfig cfg = ResolveTraining(tflags, w->space, run, &training);
  Controller controller = Controller::FromCheckpoint(ckpt.at("controller"), w->space);
  const std::vector<int> levels = ParseLevels(levels_text);
  for (int l : levels) {
    if (l > w->profile.max_level()) throw Error("range", "level " + std::to_string(l) + " exceeds the profile");
  }
  std::vector<Action> statics;
  if (statics_text.empty()) {
    for (size_t i = 0; i < w->space.flat_size(); ++i) statics.push_back(Unflatten(i, w->space));
  } else {
    for (const std::string& s : statics_text) statics.push_back(w->space.Parse(s));
  }
  const std::vector<SweepRow> rows = ContentionSweep(w->corpus, controller, w->env(), cfg, statics, levels);
  WriteFile(run.Output("sweep.csv"), SweepCsv(rows));

  // Retention: sAP at the last level over sAP at the first.
  std::map<std::string, std::pair<double, double>> ends;
  for (const SweepRow& r : rows) {
    if (r.level == levels.front()) ends[r.policy].first = r.sap;
    if (r.level == levels.back()) ends[r.policy].second = r.sap;
  }
  Json retention = Json::object();
  for (const auto& [policy, v] : ends) retention[policy] = v.first > 0.0 ? v.second / v.first : 0.0;
  WriteJsonFile(run.Output("retention.json"), retention);
  run.Config("training", cfg.ToJson(w->space));
  run.Config("levels", levels);
  std::cout << retention.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- efficiency

int Efficiency(const std::string& input, RunRecord& run) {
  const EfficiencyInputs in = EfficiencyInputs::FromJson(ReadJsonFile(run.Input(input)));
  const EfficiencyReport r = ComputeEfficiency(in);
  WriteJsonFile(run.Output("efficiency.json"), r.ToJson());
  run.Config("inputs", in.ToJson());
  std::cout << r.ToJson().dump() << "\n";
  return 0;
}

// ------------------------------------------------------------ export-heatmap

int ExportHeatmap(const std::string& space_path, const std::string& decisions, const std::string& predictions,
                  const std::string& rows, const std::string& cols, RunRecord& run) {
  const DecisionSpace space = DecisionSpace::FromJson(ReadJsonFile(run.Input(space_path)));
  if (decisions.empty() == predictions.empty()) {
    throw Error("usage", "export-heatmap needs exactly one of --decisions, --predictions");
  }
  std::vector<Action> actions;
  if (!decisions.empty()) {
    for (const Json& row : ReadJsonLines(run.Input(decisions))) actions.push_back(space.ActionFromJson(row.at("action")));
  } else {
    actions = StreamActions(ReadPredictionsJsonl(run.Input(predictions), &space));
  }
  if (actions.empty()) throw Error("schema", "no actions found in the log");
  const Heatmap h = DecisionHeatmap(actions, space, rows, cols);
  WriteFile(run.Output("heatmap.csv"), h.ToCsv());
  std::cout << Json{{"actions", actions.size()}, {"rows", h.row_dim}, {"cols", h.col_dim}}.dump() << "\n";
  return 0;
}

// -------------------------------------------------------------------- replay

std::vector<std::string> WithOutDir(std::vector<std::string> args, const std::string& out_dir) {
  bool replaced = false;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir" && i + 1 < args.size()) {
      args[i + 1] = out_dir;
      replaced = true;
    } else if (args[i].rfind("--out-dir=", 0) == 0) {
      args[i] = "--out-dir=" + out_dir;
      replaced = true;
    }
  }
  if (!replaced) throw Error("schema", "manifest args carry no --out-dir");
  return args;
}

int Replay(const std::string& manifest_path, const std::string& out_dir) {
  const Json m = ReadJsonFile(manifest_path);
  if (m.value("tool", std::string()) != "streamctl") throw Error("schema", manifest_path + ": not a manifest");
  if (m.at("command") == "replay") throw Error("schema", "cannot replay a replay");
  const std::string target = fs::absolute(out_dir).string();
  const fs::path original_cwd = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());

  int code = 0;
  Json report{{"manifest", manifest_path}, {"command", m.at("command")}};
  try {
    for (const auto& [path, hash] : m.at("inputs").items()) {
      const std::string now = HashFile(path);
      if (now != hash.get<std::string>()) {
        throw Error("input_changed", "input " + path + " hash " + now + " differs from manifest " + hash.get<std::string>());
      }
    }
    code = Run(WithOutDir(m.at("args").get<std::vector<std::string>>(), target));
    if (code == 0) {
      Json files = Json::object();
      bool identical = true;
      for (const auto& [name, hash] : m.at("outputs").items()) {
        const fs::path p = fs::path(target) / name;
        const std::string now = fs::exists(p) ? HashFile(p.string()) : std::string("missing");
        const bool same = now == hash.get<std::string>();
        identical = identical && same;
        files[name] = {{"expected", hash}, {"actual", now}, {"identical", same}};
      }
      report["outputs"] = files;
      report["identical"] = identical;
      if (!identical) code = 3;
    }
  } catch (...) {
    fs::current_path(original_cwd);
    throw;
  }
  fs::current_path(original_cwd);
  if (code == 0 || code == 3) WriteJsonFile((fs::path(target) / "replay.json").string(), report);
  if (code == 3) {
    std::cerr << Json{{"error", {{"kind", "mismatch"}, {"message", "replayed outputs differ from the manifest"}}}}.dump()
              << "\n";
  } else if (code == 0) {
    std::cout << report.dump() << "\n";
  }
  return code;
}

void PrintError(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int Run(const std::vector<std::string>& args) {
  CLI::App app{"Streaming perception controller toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  int code = 0;
  std::string out_dir;

  // Every command runs inside this wrapper so its outputs land in a manifest.
  auto with_record = [&](const std::string& name, const std::function<int(RunRecord&)>& body) {
    return [&, name, body]() {
      RunRecord run(name, args, out_dir);
      code = body(run);
      if (code == 0) run.Finish();
    };
  };

  auto* gen = app.add_subcommand("gen-trace", "Generate a synthetic corpus, profile and detection trace");
  std::string gen_config;
  std::optional<uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "Generator config JSON")->required();
  gen->add_option("--seed", gen_seed, "Override the config seed");
  gen->add_option("--out-dir", out_dir, "Output directory")->required();
  gen->callback(with_record("gen-trace", [&](RunRecord& r) { return GenTrace(gen_config, gen_seed, r); }));

  WorldPaths paths;
  TrainingFlags tflags;

  auto* pre = app.add_subcommand("prefetch", "Record the fixed policy's streams for R2 rewards");
  AddWorldOptions(pre, paths);
  AddTrainingFlags(pre, tflags);
  pre->add_option("--out-dir", out_dir, "Output directory")->required();
  pre->callback(with_record("prefetch", [&](RunRecord& r) { return Prefetch(paths, tflags, r); }));

  auto* bench = app.add_subcommand("bench-static", "Stream every static configuration");
  int bench_level = 0;
  AddWorldOptions(bench, paths);
  AddTrainingFlags(bench, tflags);
  bench->add_option("--level", bench_level, "Constant contention level")->check(CLI::NonNegativeNumber);
  bench->add_option("--out-dir", out_dir, "Output directory")->required();
  bench->callback(with_record("bench-static", [&](RunRecord& r) { return BenchStatic(paths, tflags, bench_level, r); }));

  auto* train = app.add_subcommand("train", "Train the controller");
  ControllerFlags cflags;
  std::string fixed_cache;
  AddWorldOptions(train, paths);
  AddTrainingFlags(train, tflags);
  train->add_option("--controller", cflags.config, "Controller config JSON");
  train->add_option("--lr", cflags.lr, "Learning rate");
  train->add_option("--epsilon-min", cflags.epsilon_min, "Exploration floor");
  train->add_option("--strategy", cflags.strategy, "egreedy | ucb");
  train->add_option("--epochs", tflags.epochs, "Epochs");
  train->add_option("--reward", tflags.reward, "r1 | r2 | trad");
  train->add_option("--p", tflags.p, "Decision probability per processed frame");
  train->add_option("--fixed-cache", fixed_cache, "Prefetched fixed-policy JSONL");
  train->add_option("--out-dir", out_dir, "Output directory")->required();
  train->callback(
      with_record("train", [&](RunRecord& r) { return TrainCommand(paths, tflags, cflags, fixed_cache, r); }));

  auto* eval = app.add_subcommand("evaluate", "Streaming evaluation of predictions, a checkpoint or a policy");
  EvalFlags eflags;
  eval->add_option("--gt", paths.gt, "Ground-truth JSONL")->required();
  eval->add_option("--space", paths.space, "Decision space JSON");
  eval->add_option("--profile", paths.profile, "Runtime profile JSON");
  eval->add_option("--detections", paths.detections, "Detection trace JSONL");
  eval->add_option("--predictions", eflags.predictions, "Prediction JSONL to score");
  eval->add_option("--checkpoint", eflags.checkpoint, "Training checkpoint");
  eval->add_option("--baseline", eflags.baseline, "adaptive-scale");
  eval->add_option("--level", eflags.level, "Constant contention level")->check(CLI::NonNegativeNumber);
  AddTrainingFlags(eval, tflags);
  eval->add_option("--out-dir", out_dir, "Output directory")->required();
  eval->callback(with_record("evaluate", [&](RunRecord& r) {
    if (eflags.predictions.empty() && (paths.space.empty() || paths.profile.empty())) {
      throw Error("usage", "evaluate: --space and --profile are required to simulate runs");
    }
    return Evaluate(paths, tflags, eflags, r);
  }));

  auto* sweep = app.add_subcommand("sweep-contention", "sAP per contention level, learned vs static");
  std::string sweep_ckpt, sweep_levels = "0";
  std::vector<std::string> sweep_statics;
  AddWorldOptions(sweep, paths);
  AddTrainingFlags(sweep, tflags);
  sweep->add_option("--checkpoint", sweep_ckpt, "Training checkpoint")->required();
  sweep->add_option("--levels", sweep_levels, "Comma-separated levels, e.g. 0,1,2,3");
  sweep->add_option("--static", sweep_statics, "Static action to compare (repeatable; default all)");
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();
  sweep->callback(with_record("sweep-contention", [&](RunRecord& r) {
    return SweepContention(paths, tflags, sweep_ckpt, sweep_levels, sweep_statics, r);
  }));

  auto* eff = app.add_subcommand("efficiency", "Deployment efficiency ratios");
  std::string eff_input;
  eff->add_option("--input", eff_input, "Efficiency inputs JSON")->required();
  eff->add_option("--out-dir", out_dir, "Output directory")->required();
  eff->callback(with_record("efficiency", [&](RunRecord& r) { return Efficiency(eff_input, r); }));

  auto* heat = app.add_subcommand("export-heatmap", "Action-choice frequencies over two dimensions");
  std::string heat_space, heat_decisions, heat_predictions, heat_rows = kDimScale, heat_cols = kDimProposals;
  heat->add_option("--space", heat_space, "Decision space JSON")->required();
  heat->add_option("--decisions", heat_decisions, "decisions.jsonl from evaluate");
  heat->add_option("--predictions", heat_predictions, "Prediction JSONL with configs");
  heat->add_option("--rows", heat_rows, "Row dimension");
  heat->add_option("--cols", heat_cols, "Column dimension");
  heat->add_option("--out-dir", out_dir, "Output directory")->required();
  heat->callback(with_record("export-heatmap", [&](RunRecord& r) {
    return ExportHeatmap(heat_space, heat_decisions, heat_predictions, heat_rows, heat_cols, r);
  }));

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  std::string replay_manifest;
  replay->add_option("--manifest", replay_manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out-dir", out_dir, "Directory for the re-run outputs")->required();
  replay->callback([&]() { code = Replay(replay_manifest, out_dir); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", e.what());
    return 2;
  } catch (const Error& e) {
    PrintError(e.kind(), e.what());
    return e.kind() == "usage" ? 2 : 1;
  } catch (const Json::exception& e) {
    PrintError("schema", e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("internal", e.what());
    return 1;
  }
  return code;
}

}  // namespace streamctl::cli
