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
#include "streamctl/training.h"

#include <cmath>
#include <random>
#include <sstream>

namespace streamctl {

ContentionSchedule ContentionPlan::For(const std::string& seq_id, int epoch, uint64_t seed) const {
  switch (kind) {
    case Kind::kNone:
      return {};
    case Kind::kSchedule:
      return schedule;
    case Kind::kRandomLevel: {
      const uint64_t h = MixSeed({seed, static_cast<uint64_t>(epoch), Fnv1a(seq_id), 0x636f6e74});
      return ContentionSchedule::Constant(static_cast<int>(h % static_cast<uint64_t>(max_level + 1)));
    }
  }
  return {};
}

std::vector<ContentionSchedule> ContentionPlan::AllFor(const std::string& seq_id) const {
  (void)seq_id;
  if (kind == Kind::kNone) return {ContentionSchedule{}};
  if (kind == Kind::kSchedule) return {schedule};
  std::vector<ContentionSchedule> out;
  for (int l = 0; l <= max_level; ++l) out.push_back(ContentionSchedule::Constant(l));
  return out;
}

Json ContentionPlan::ToJson() const {
  const char* k = kind == Kind::kNone ? "none" : (kind == Kind::kSchedule ? "schedule" : "random_level");
  return Json{{"kind", k}, {"schedule", schedule.levels}, {"max_level", max_level}, {"sensor_lag", sensor_lag}};
}

ContentionPlan ContentionPlan::FromJson(const Json& j) {
  ContentionPlan p;
  const std::string k = j.value("kind", std::string("none"));
  if (k == "none") {
    p.kind = Kind::kNone;
  } else if (k == "schedule") {
    p.kind = Kind::kSchedule;
  } else if (k == "random_level") {
    p.kind = Kind::kRandomLevel;
  } else {
    throw Error("schema", "unknown contention plan '" + k + "' (none|schedule|random_level)");
  }
  p.schedule.levels = j.value("schedule", std::vector<int>{});
  p.max_level = j.value("max_level", 0);
  p.sensor_lag = j.value("sensor_lag", 0);
  if (p.max_level < 0 || p.sensor_lag < 0) throw Error("schema", "contention plan values must be >= 0");
  return p;
}

void TrainingConfig::Validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("schema", "decision probability p must lie in [0,1]");
  if (epochs < 0) throw Error("schema", "epochs must be >= 0");
  if (context_cost_s < 0.0) throw Error("schema", "context cost must be >= 0");
  if (eval_stride < 1) throw Error("schema", "evaluation stride must be >= 1");
}

Json TrainingConfig::ToJson(const DecisionSpace& space) const {
  return Json{{"p", p},
              {"epochs", epochs},
              {"seed", seed},
              {"fixed_policy", space.ActionToJson(FixedPolicy(space))},
              {"initial_action", space.ActionToJson(InitialAction(space))},
              {"reward", RewardModeName(reward)},
              {"frame_loss", FrameLossName(frame_loss)},
              {"trad_lambda", trad_lambda},
              {"context_cost_s", context_cost_s},
              {"scheduler", SchedulerPolicyName(scheduler)},
              {"contention", contention.ToJson()},
              {"updates_enabled", updates_enabled},
              {"forecast_output", forecast_output},
              {"eval_stride", eval_stride},
              {"decide_at_start", decide_at_start},
              {"latency_jitter_frac", sim.latency_jitter_frac},
              {"sim_seed", sim.seed}};
}

TrainingConfig TrainingConfig::FromJson(const Json& j, const DecisionSpace& space) {
  TrainingConfig c;
  c.p = j.value("p", c.p);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("fixed_policy")) c.fixed_policy = space.ActionFromJson(j["fixed_policy"]);
  if (j.contains("initial_action")) c.initial_action = space.ActionFromJson(j["initial_action"]);
  if (j.contains("reward")) c.reward = ParseRewardMode(j["reward"].get<std::string>());
  if (j.contains("frame_loss")) c.frame_loss = ParseFrameLoss(j["frame_loss"].get<std::string>());
  c.trad_lambda = j.value("trad_lambda", c.trad_lambda);
  c.context_cost_s = j.value("context_cost_s", c.context_cost_s);
  if (j.contains("scheduler")) c.scheduler = ParseSchedulerPolicy(j["scheduler"].get<std::string>());
  if (j.contains("contention")) c.contention = ContentionPlan::FromJson(j["contention"]);
  c.updates_enabled = j.value("updates_enabled", c.updates_enabled);
  c.forecast_output = j.value("forecast_output", c.forecast_output);
  c.eval_stride = j.value("eval_stride", c.eval_stride);
  c.decide_at_start = j.value("decide_at_start", c.decide_at_start);
  c.sim.latency_jitter_frac = j.value("latency_jitter_frac", c.sim.latency_jitter_frac);
  c.sim.seed = j.value("sim_seed", c.sim.seed);
  c.Validate();
  return c;
}

SequenceRun RunControlledSequence(const Sequence& seq, Controller& controller, const Environment& env,
                                  const TrainingConfig& cfg, RunMode mode, int epoch) {
  SequenceRun run;
  run.contention = cfg.contention.For(seq.id, epoch, cfg.seed);
  PerceptionSim sim(seq, env.space, env.profile, env.source, cfg.sim);
  ContentionSensor sensor(cfg.contention.sensor_lag);
  std::mt19937_64 rng(MixSeed({cfg.seed, static_cast<uint64_t>(epoch), Fnv1a(seq.id), 0x626572}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const DecisionHook hook = [&](const HookState& s) {
    HookResult r;
    bool decide = false;
    if (mode == RunMode::kEvaluate) {
      decide = s.processed % cfg.eval_stride == 0;
    } else if (cfg.p > 0.0) {
      // The draw happens on every processed frame so the stream of draws does
      // not depend on decide_at_start.
      decide = unit(rng) < cfg.p || (cfg.decide_at_start && s.processed == 0);
    }
    if (!decide) return r;
    const int sensed = sensor.Sense(s.injected_level);
    const std::vector<Detection>* latest = s.emitted->empty() ? nullptr : &s.emitted->back().detections;
    DecisionRecord d;
    d.z = env.context.Build(seq, s.frame, latest, sensed);
    d.a = controller.Select(d.z, mode == RunMode::kTrain);
    d.t = s.now_s;
    d.frame = s.frame;
    d.sensed_level = sensed;
    r.action = d.a;
    r.cost_s = cfg.context_cost_s;
    r.sensed_level = sensed;
    run.decisions.push_back(std::move(d));
    return r;
  };
  ScheduleOptions opts;
  opts.policy = cfg.scheduler;
  opts.contention = run.contention;
  opts.forecast_output = cfg.forecast_output;
  run.schedule = RunSchedule(sim, cfg.InitialAction(env.space), opts, hook);
  return run;
}

std::vector<Experience> SegmentRewards(const StreamBuffer& decisions, std::span<const PredictionRecord> stream,
                                       const Sequence& seq, const TrainingConfig& cfg,
                                       std::span<const PredictionRecord> fixed) {
  std::vector<Experience> out;
  for (size_t n = 0; n < decisions.size(); ++n) {
    const RewardSegment seg{decisions[n].t, n + 1 < decisions.size() ? decisions[n + 1].t : seq.duration()};
    double r = 0.0;
    switch (cfg.reward) {
      case RewardMode::kR1:
        r = RewardR1(stream, seq, seg, cfg.frame_loss);
        break;
      case RewardMode::kR2:
        r = RewardR2(stream, fixed, seq, seg, cfg.frame_loss);
        break;
      case RewardMode::kTraditional:
        r = RewardTraditional(stream, seq, seg, cfg.trad_lambda, cfg.frame_loss);
        break;
    }
    out.push_back({decisions[n].z, decisions[n].a, r});
  }
  return out;
}

double FlushAndTrain(const std::vector<Experience>& tuples, Controller& controller, const TrainingConfig& cfg) {
  for (const Experience& e : tuples) controller.Observe(e);
  return cfg.updates_enabled ? controller.Train() : 0.0;
}

std::string TrainingLog::ToCsv() const {
  std::ostringstream out;
  out << "epoch,mean_reward,loss,epsilon,decisions,sim_time_s\n";
  for (const EpochLog& e : epochs) {
    out << e.epoch << ',' << FormatDouble(e.mean_reward) << ',' << FormatDouble(e.loss) << ','
        << FormatDouble(e.epsilon) << ',' << e.decisions << ',' << FormatDouble(e.sim_time_s) << '\n';
  }
  return out.str();
}

FixedPolicyCache PrefetchFixedPolicy(const Corpus& corpus, const Environment& env, const TrainingConfig& cfg) {
  FixedPolicyCache cache(cfg.FixedPolicy(env.space));
  for (const Sequence& seq : corpus.sequences) {
    for (const ContentionSchedule& c : cfg.contention.AllFor(seq.id)) {
      PerceptionSim sim(seq, env.space, env.profile, env.source, cfg.sim);
      ScheduleOptions opts;
      opts.policy = cfg.scheduler;
      opts.contention = c;
      opts.forecast_output = cfg.forecast_output;
      cache.Put(CacheKey(seq.id, c), RunSchedule(sim, cache.policy(), opts).records);
    }
  }
  return cache;
}

TrainingLog Train(const Corpus& corpus, Controller& controller, const Environment& env, const TrainingConfig& cfg,
                  const FixedPolicyCache* cache, const EpochCallback& on_epoch) {
  cfg.Validate();
  if (corpus.sequences.empty()) throw Error("schema", "training corpus is empty");
  if (cfg.reward == RewardMode::kR2) {
    if (cache == nullptr) throw Error("schema", "R2 rewards need a fixed-policy cache");
    for (const Sequence& seq : corpus.sequences) {
      for (const ContentionSchedule& c : cfg.contention.AllFor(seq.id)) cache->Get(CacheKey(seq.id, c));
    }
  }
  TrainingLog log;
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochLog row;
    row.epoch = e;
    double reward_sum = 0.0, loss_sum = 0.0;
    int updates = 0;
    for (const Sequence& seq : corpus.sequences) {
      const SequenceRun run = RunControlledSequence(seq, controller, env, cfg, RunMode::kTrain, e);
      std::span<const PredictionRecord> fixed;
      if (cfg.reward == RewardMode::kR2) fixed = cache->Get(CacheKey(seq.id, run.contention));
      const auto tuples = SegmentRewards(run.decisions, run.schedule.records, seq, cfg, fixed);
      for (const Experience& t : tuples) reward_sum += t.r;
      row.decisions += static_cast<int>(tuples.size());
      try {
        loss_sum += FlushAndTrain(tuples, controller, cfg);
      } catch (const Error& err) {
        throw Error(err.kind(), std::string(err.what()) + " (epoch " + std::to_string(e) + ", sequence " + seq.id +
                                    ", buffer " + std::to_string(controller.buffer().size()) + ")");
      }
      ++updates;
      row.sim_time_s += run.schedule.clock_end_s;
    }
    row.mean_reward = row.decisions > 0 ? reward_sum / row.decisions : 0.0;
    row.loss = updates > 0 ? loss_sum / updates : 0.0;
    row.epsilon = controller.explorer().epsilon();
    log.total_sim_time_s += row.sim_time_s;
    log.epochs.push_back(row);
    if (on_epoch) on_epoch(e, controller);
  }
  return log;
}

std::vector<SequenceRun> EvaluateController(const Corpus& corpus, Controller& controller, const Environment& env,
                                            const TrainingConfig& cfg) {
  std::vector<SequenceRun> runs;
  for (const Sequence& seq : corpus.sequences) {
    runs.push_back(RunControlledSequence(seq, controller, env, cfg, RunMode::kEvaluate, 0));
  }
  return runs;
}

}  // namespace streamctl
