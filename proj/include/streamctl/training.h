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
#ifndef STREAMCTL_TRAINING_H_
#define STREAMCTL_TRAINING_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "streamctl/context.h"
#include "streamctl/controller.h"
#include "streamctl/perception.h"
#include "streamctl/rewards.h"
#include "streamctl/scheduler.h"

namespace streamctl {

// One recorded decision (z, a, t_a).
struct DecisionRecord {
  std::vector<double> z;
  Action a;
  double t = 0.0;
  int frame = 0;
  int sensed_level = 0;
};
using StreamBuffer = std::vector<DecisionRecord>;

// Injected contention per sequence run.
struct ContentionPlan {
  enum class Kind { kNone, kSchedule, kRandomLevel };
  Kind kind = Kind::kNone;
  ContentionSchedule schedule;  // kSchedule
  int max_level = 0;            // kRandomLevel: constant level drawn per run
  int sensor_lag = 0;

  ContentionSchedule For(const std::string& seq_id, int epoch, uint64_t seed) const;
  // Every schedule For() can return for the sequence.
  std::vector<ContentionSchedule> AllFor(const std::string& seq_id) const;
  Json ToJson() const;
  static ContentionPlan FromJson(const Json& j);
};

struct TrainingConfig {
  double p = 1.0 / 30.0;
  int epochs = 10;
  uint64_t seed = 0;
  std::optional<Action> fixed_policy;  // defaults to the mid action
  std::optional<Action> initial_action;  // defaults to the fixed policy
  RewardMode reward = RewardMode::kR2;
  FrameLoss frame_loss = FrameLoss::kMatchedIou;
  double trad_lambda = 0.01;
  double context_cost_s = 0.0;
  SchedulerPolicy scheduler = SchedulerPolicy::kShrinkingTail;
  ContentionPlan contention;
  bool updates_enabled = true;
  bool forecast_output = false;
  int eval_stride = 30;
  // With p > 0, the first processed frame of every training sequence is also
  // a decision point, matching evaluation, which decides at processed frame 0.
  bool decide_at_start = true;
  SimOptions sim;

  void Validate() const;
  Json ToJson(const DecisionSpace& space) const;
  static TrainingConfig FromJson(const Json& j, const DecisionSpace& space);
  Action FixedPolicy(const DecisionSpace& space) const { return fixed_policy.value_or(space.MidAction()); }
  Action InitialAction(const DecisionSpace& space) const { return initial_action.value_or(FixedPolicy(space)); }
};

// Everything a run reads but does not own.
struct Environment {
  const DecisionSpace& space;
  const RuntimeProfile& profile;
  const DetectionSource& source;
  const ContextBuilder& context;
};

enum class RunMode {
  kTrain,     // Bernoulli(p) decisions, exploring selection, recorded
  kEvaluate,  // decisions at processed frames 0, eval_stride, 2 eval_stride, ...; greedy
};

struct SequenceRun {
  StreamBuffer decisions;
  ScheduleResult schedule;
  ContentionSchedule contention;
};

// Streams one sequence with the controller in the loop. Context builds are
// charged to the clock; nothing else the controller does is.
SequenceRun RunControlledSequence(const Sequence& seq, Controller& controller, const Environment& env,
                                  const TrainingConfig& cfg, RunMode mode, int epoch);

// Rewards for consecutive decisions, the last segment running to the stream
// end. `fixed` is required for R2.
std::vector<Experience> SegmentRewards(const StreamBuffer& decisions, std::span<const PredictionRecord> stream,
                                       const Sequence& seq, const TrainingConfig& cfg,
                                       std::span<const PredictionRecord> fixed = {});

// Pushes the rewarded tuples and runs the controller's update steps (when
// enabled). Returns the mean loss of the update call.
double FlushAndTrain(const std::vector<Experience>& tuples, Controller& controller, const TrainingConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  double epsilon = 0.0;
  int decisions = 0;
  double sim_time_s = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  double total_sim_time_s = 0.0;

  std::string ToCsv() const;
};

// Streams of the fixed policy on every sequence and contention schedule the
// plan can produce.
FixedPolicyCache PrefetchFixedPolicy(const Corpus& corpus, const Environment& env, const TrainingConfig& cfg);

using EpochCallback = std::function<void(int epoch, const Controller& controller)>;

TrainingLog Train(const Corpus& corpus, Controller& controller, const Environment& env, const TrainingConfig& cfg,
                  const FixedPolicyCache* cache = nullptr, const EpochCallback& on_epoch = {});

// Greedy evaluation over a corpus; one run per sequence at epoch 0 of the plan.
std::vector<SequenceRun> EvaluateController(const Corpus& corpus, Controller& controller, const Environment& env,
                                            const TrainingConfig& cfg);

}  // namespace streamctl

#endif  // STREAMCTL_TRAINING_H_
