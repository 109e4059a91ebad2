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
#include "streamctl/scheduler.h"

#include <algorithm>
#include <cmath>

namespace streamctl {

namespace {

// Left limit of Tail at x: an exact integer maps to 1 rather than 0.
double TailLeft(double x) { return x - std::ceil(x - kTailEpsilon) + 1.0; }

}  // namespace

double Tail(double t) { return std::max(0.0, t - std::floor(t + kTailEpsilon)); }

bool ShouldWait(double s_frames, double rho_frames) {
  if (rho_frames <= 1.0 + kTailEpsilon) return false;
  return TailLeft(s_frames + rho_frames) < Tail(s_frames) - kTailEpsilon;
}

SchedulerPolicy ParseSchedulerPolicy(const std::string& s) {
  if (s == "idle-free" || s == "idle_free") return SchedulerPolicy::kIdleFree;
  if (s == "shrinking-tail" || s == "shrinking_tail") return SchedulerPolicy::kShrinkingTail;
  throw Error("schema", "unknown scheduler '" + s + "' (idle-free|shrinking-tail)");
}

std::string SchedulerPolicyName(SchedulerPolicy p) {
  return p == SchedulerPolicy::kIdleFree ? "idle-free" : "shrinking-tail";
}

ScheduleDecision Decide(double now_s, double rho_frames, SchedulerPolicy policy, double frame_period) {
  ScheduleDecision d;
  d.next_start = now_s;
  if (policy == SchedulerPolicy::kShrinkingTail && ShouldWait(now_s / frame_period, rho_frames)) {
    d.wait = true;
    d.next_start = std::max(now_s, (NewestFrameAt(now_s, frame_period) + 1) * frame_period);
  }
  d.frame_to_process = NewestFrameAt(d.next_start, frame_period);
  return d;
}

int ContentionSchedule::At(int frame) const {
  if (levels.empty()) return 0;
  return levels[std::clamp<size_t>(static_cast<size_t>(std::max(frame, 0)), 0, levels.size() - 1)];
}

int ContentionSchedule::max_level() const {
  return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
}

int ContentionSensor::Sense(int injected) {
  history_.push_back(injected);
  const int k = static_cast<int>(history_.size()) - 1;
  return history_[std::max(0, k - lag_)];
}

ScheduleResult RunSchedule(PerceptionSim& sim, const Action& initial, const ScheduleOptions& options,
                           const DecisionHook& hook) {
  const Sequence& seq = sim.sequence();
  const double period = seq.frame_period;
  const double end = seq.duration();
  const int n = seq.size();
  sim.Reset();

  ScheduleResult out;
  Action action = initial;
  std::optional<int> sensed;
  double t = 0.0;
  int last_frame = -1;
  while (true) {
    int frame = NewestFrameAt(t, period);
    // A job faster than the frame rate idles until an unprocessed frame arrives.
    if (frame <= last_frame) {
      frame = last_frame + 1;
      t = std::max(t, frame * period);
    }
    if (frame >= n) break;
    if (hook) {
      const HookState state{t, frame, out.processed, &action, options.contention.At(frame), &out.records};
      HookResult r = hook(state);
      if (r.action) {
        sim.space().Validate(*r.action);
        action = std::move(*r.action);
      }
      if (r.sensed_level) sensed = r.sensed_level;
      if (r.cost_s < 0.0) throw Error("range", "context cost must be >= 0");
      t += r.cost_s;
      out.context_cost_s += r.cost_s;
      frame = NewestFrameAt(t, period);
      if (frame >= n) break;
    }
    const int level_for_wait = sensed.value_or(options.contention.At(frame));
    const double rho = sim.NextLatency(action, level_for_wait) / period;
    const ScheduleDecision d = Decide(t, rho, options.policy, period);
    if (d.wait) ++out.waits;
    t = d.next_start;
    frame = d.frame_to_process;
    if (frame >= n) break;

    const TrackSet before = sim.tracks();
    InferResult res = sim.Step(frame, action, options.contention.At(frame));
    const double finish = t + res.latency_s;
    if (finish > end + kTailEpsilon * period) {
      ++out.dropped;
      break;
    }
    if (options.forecast_output && !before.empty() && !out.records.empty()) {
      const int source = out.records.back().source_frame_index;
      for (int k = NewestFrameAt(t, period) + 1; k * period < finish && k < n; ++k) {
        PredictionRecord fr;
        fr.emit_timestamp = k * period;
        fr.source_frame_index = source;
        fr.config_used = out.records.back().config_used;
        for (const TrackState& tr : before) {
          const double dt = k - tr.last_frame;
          fr.detections.push_back({tr.last_box.Translated(tr.vx * dt, tr.vy * dt), tr.score, tr.category, tr.track_id});
        }
        out.records.push_back(std::move(fr));
      }
    }
    out.records.push_back({std::move(res.detections), finish, frame, action});
    ++out.processed;
    last_frame = frame;
    t = finish;
  }
  out.clock_end_s = end;
  return out;
}

}  // namespace streamctl
