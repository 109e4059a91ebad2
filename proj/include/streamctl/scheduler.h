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
#ifndef STREAMCTL_SCHEDULER_H_
#define STREAMCTL_SCHEDULER_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "streamctl/config_space.h"
#include "streamctl/perception.h"
#include "streamctl/stream.h"

namespace streamctl {

inline constexpr double kTailEpsilon = 1e-9;

// Fractional part in frame units; values within kTailEpsilon below an integer
// round to 0.
double Tail(double t);

// Wait for the next frame instead of starting now at s (frames)? Never waits
// when rho <= 1 frame. The finishing-time tail is taken as a left limit so a
// job ending exactly on a frame boundary counts as a full tail (that frame is
// already available to the next pairing query).
bool ShouldWait(double s_frames, double rho_frames);

enum class SchedulerPolicy { kIdleFree, kShrinkingTail };
SchedulerPolicy ParseSchedulerPolicy(const std::string& s);
std::string SchedulerPolicyName(SchedulerPolicy p);

struct ScheduleDecision {
  bool wait = false;
  double next_start = 0.0;  // seconds
  int frame_to_process = 0;
};

ScheduleDecision Decide(double now_s, double rho_frames, SchedulerPolicy policy, double frame_period);

// Injected contention level per frame index; the last level persists past the
// end and an empty schedule means level 0.
struct ContentionSchedule {
  std::vector<int> levels;

  int At(int frame) const;
  int max_level() const;
  static ContentionSchedule Constant(int level) { return {{level}}; }
};

// Reports the injected level as seen `lag` decisions ago.
class ContentionSensor {
 public:
  explicit ContentionSensor(int lag = 0) : lag_(lag) {}
  int Sense(int injected);
  void Reset() { history_.clear(); }
  int lag() const { return lag_; }

 private:
  int lag_;
  std::vector<int> history_;
};

struct HookState {
  double now_s = 0.0;
  int frame = 0;      // newest available frame
  int processed = 0;  // jobs completed so far in this sequence
  const Action* action = nullptr;
  int injected_level = 0;
  const std::vector<PredictionRecord>* emitted = nullptr;
};

struct HookResult {
  std::optional<Action> action;
  double cost_s = 0.0;  // charged to the clock before the job starts
  std::optional<int> sensed_level;
};

// Called before every job start.
using DecisionHook = std::function<HookResult(const HookState&)>;

struct ScheduleOptions {
  SchedulerPolicy policy = SchedulerPolicy::kShrinkingTail;
  ContentionSchedule contention;
  // Emit forecast records at frame arrivals while a job is running.
  bool forecast_output = false;
};

struct ScheduleResult {
  std::vector<PredictionRecord> records;
  int processed = 0;
  int waits = 0;
  int dropped = 0;  // jobs that would have finished after the stream ended
  double context_cost_s = 0.0;
  // Simulated clock at sequence end; runs always end at the stream duration.
  double clock_end_s = 0.0;
};

// Discrete-event loop over one sequence. At each free instant the hook may
// reconfigure, the wait test reads rho for the current action at the sensed
// level, and the next job runs on the newest frame. Job latency uses the
// injected level.
ScheduleResult RunSchedule(PerceptionSim& sim, const Action& initial, const ScheduleOptions& options,
                           const DecisionHook& hook = {});

}  // namespace streamctl

#endif  // STREAMCTL_SCHEDULER_H_
