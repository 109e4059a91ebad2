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
#include <gtest/gtest.h>

#include "oracles.h"
#include "streamctl/scheduler.h"

namespace streamctl {
namespace {

using testing::SpaceWithSizes;

TEST(Tail, Examples) {
  EXPECT_NEAR(Tail(2.5), 0.5, 1e-12);
  EXPECT_EQ(Tail(3.0), 0.0);
  EXPECT_NEAR(Tail(4.3), 0.3, 1e-9);
  EXPECT_EQ(Tail(3.0 - 1e-12), 0.0);
}

TEST(ShouldWait, Examples) {
  EXPECT_FALSE(ShouldWait(2.1, 1.8));
  EXPECT_TRUE(ShouldWait(2.5, 1.8));
  EXPECT_TRUE(ShouldWait(60.0 / 33.0, 60.0 / 33.0));
  for (double s : {0.2, 0.5, 0.99, 3.7}) EXPECT_FALSE(ShouldWait(s, 0.7));
  EXPECT_FALSE(ShouldWait(2.5, 1.0));
}

TEST(Decide, WaitMovesToNextFrame) {
  const double p = kDefaultFramePeriod;
  const ScheduleDecision d = Decide(2.5 * p, 1.8, SchedulerPolicy::kShrinkingTail, p);
  EXPECT_TRUE(d.wait);
  EXPECT_NEAR(d.next_start, 3 * p, 1e-12);
  EXPECT_EQ(d.frame_to_process, 3);
  const ScheduleDecision idle = Decide(2.5 * p, 1.8, SchedulerPolicy::kIdleFree, p);
  EXPECT_FALSE(idle.wait);
  EXPECT_EQ(idle.frame_to_process, 2);
}

struct Fixture {
  DecisionSpace space = SpaceWithSizes({2});
  RuntimeProfile profile;
  Sequence seq;
  SyntheticSource source{space, DegradationModel{}, 1};

  Fixture(double rho0, double rho1, int frames) {
    profile = RuntimeProfile::FromCurve(
        "two", space, [&](const Action& a) { return (a.index[0] ? rho1 : rho0) * kDefaultFramePeriod; }, 0.0, 1.0,
        0);
    SceneSpec scene;
    scene.frames = frames;
    seq = GenerateSequence(scene, "s", 2);
  }
};

TEST(RunSchedule, FastDetectorProcessesEveryFrame) {
  Fixture f(0.7, 0.7, 120);
  for (SchedulerPolicy p : {SchedulerPolicy::kIdleFree, SchedulerPolicy::kShrinkingTail}) {
    PerceptionSim sim(f.seq, f.space, f.profile, f.source);
    ScheduleOptions o;
    o.policy = p;
    const ScheduleResult r = RunSchedule(sim, Action{{0}}, o);
    EXPECT_EQ(r.processed, 120);
    EXPECT_EQ(r.waits, 0);
    for (int i = 0; i < r.processed; ++i) EXPECT_EQ(r.records[i].source_frame_index, i);
  }
}

TEST(RunSchedule, ShrinkingTailBeatsIdleFreeAtRho60Over33) {
  const double rho = 60.0 / 33.0;
  EXPECT_LT(testing::ConstantRhoMismatch(rho, SchedulerPolicy::kShrinkingTail, 300),
            testing::ConstantRhoMismatch(rho, SchedulerPolicy::kIdleFree, 300));
}

TEST(RunSchedule, NeverProcessesFutureFrame) {
  Fixture f(1.6, 2.3, 200);
  PerceptionSim sim(f.seq, f.space, f.profile, f.source);
  int calls = 0;
  const ScheduleResult r = RunSchedule(sim, Action{{0}}, {}, [&](const HookState&) {
    HookResult h;
    h.action = Action{{calls++ % 3 == 0}};
    return h;
  });
  ASSERT_GT(r.processed, 0);
  const double p = f.seq.frame_period;
  for (const PredictionRecord& rec : r.records) {
    const double start = rec.emit_timestamp - LookupLatency(f.profile, rec.config_used, 0);
    EXPECT_LE(rec.source_frame_index * p, start + 1e-9);
    EXPECT_EQ(rec.source_frame_index, NewestFrameAt(start, p));
  }
  for (size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_GE(r.records[i].emit_timestamp, r.records[i - 1].emit_timestamp);
  }
}

TEST(RunSchedule, WaitTestUsesCurrentAction) {
  Fixture f(1.8, 1.2, 200);
  PerceptionSim sim(f.seq, f.space, f.profile, f.source);
  const int switch_at = 5;
  const ScheduleResult r = RunSchedule(sim, Action{{0}}, {}, [&](const HookState& s) {
    HookResult h;
    if (s.processed == switch_at) h.action = Action{{1}};
    return h;
  });
  const double p = f.seq.frame_period;
  int checked = 0;
  for (size_t i = 1; i < r.records.size(); ++i) {
    const double s = r.records[i - 1].emit_timestamp;
    const double start = r.records[i].emit_timestamp - LookupLatency(f.profile, r.records[i].config_used, 0);
    const bool waited = start > s + 1e-12;
    const double rho = i >= switch_at ? 1.2 : 1.8;
    EXPECT_EQ(waited, ShouldWait(s / p, rho)) << i;
    if (i > switch_at) {
      EXPECT_EQ(r.records[i].config_used, (Action{{1}}));
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(RunSchedule, SingleActionMatchesOriginalRule) {
  // Without a hook the modified scheduler is the plain shrinking-tail loop.
  Fixture f(2.2, 2.2, 150);
  PerceptionSim sim(f.seq, f.space, f.profile, f.source);
  const ScheduleResult r = RunSchedule(sim, Action{{0}}, {});
  const double p = f.seq.frame_period, lat = 2.2 * p;
  double t = 0.0;
  size_t i = 0;
  while (true) {
    const ScheduleDecision d = Decide(t, 2.2, SchedulerPolicy::kShrinkingTail, p);
    if (d.frame_to_process >= f.seq.size() || d.next_start + lat > f.seq.duration() + 1e-9 * p) break;
    ASSERT_LT(i, r.records.size());
    EXPECT_EQ(r.records[i].source_frame_index, d.frame_to_process);
    EXPECT_NEAR(r.records[i].emit_timestamp, d.next_start + lat, 1e-12);
    t = d.next_start + lat;
    ++i;
  }
  EXPECT_EQ(i, r.records.size());
}

TEST(ContentionSensor, Lag) {
  ContentionSensor sensor(1);
  std::vector<int> out;
  for (int v : {0, 0, 2, 2}) out.push_back(sensor.Sense(v));
  EXPECT_EQ(out, (std::vector<int>{0, 0, 0, 2}));
  ContentionSensor now;
  EXPECT_EQ(now.Sense(3), 3);
}

TEST(ContentionSchedule, LastLevelPersists) {
  const ContentionSchedule s{{0, 1, 3}};
  EXPECT_EQ(s.At(0), 0);
  EXPECT_EQ(s.At(2), 3);
  EXPECT_EQ(s.At(1000), 3);
  EXPECT_EQ(ContentionSchedule{}.At(5), 0);
  EXPECT_EQ(s.max_level(), 3);
}

TEST(RunSchedule, InjectedLevelDrivesJobLatency) {
  const DecisionSpace space = SpaceWithSizes({2});
  const RuntimeProfile profile = RuntimeProfile::FromCurve(
      "c", space, [](const Action&) { return 0.5 * kDefaultFramePeriod; }, 1.0, 1.0, 3);
  SceneSpec scene;
  scene.frames = 60;
  const Sequence seq = GenerateSequence(scene, "c", 1);
  const SyntheticSource source(space, DegradationModel{}, 1);
  PerceptionSim sim(seq, space, profile, source);
  ScheduleOptions o;
  o.contention = ContentionSchedule::Constant(3);
  // A hook reporting level 0 keeps the wait test optimistic, but jobs still
  // take the level-3 latency.
  const ScheduleResult r = RunSchedule(sim, Action{{0}}, o, [](const HookState&) {
    HookResult h;
    h.sensed_level = 0;
    return h;
  });
  EXPECT_EQ(r.waits, 0);
  EXPECT_NEAR(r.records[0].emit_timestamp, 2.0 * kDefaultFramePeriod, 1e-12);
}

TEST(RunSchedule, RejectsNegativeContextCost) {
  Fixture f(1.5, 1.5, 30);
  PerceptionSim sim(f.seq, f.space, f.profile, f.source);
  EXPECT_THROW(RunSchedule(sim, Action{{0}}, {}, [](const HookState&) { return HookResult{{}, -1.0, {}}; }), Error);
}

TEST(SchedulerPolicy, Names) {
  EXPECT_EQ(ParseSchedulerPolicy("idle-free"), SchedulerPolicy::kIdleFree);
  EXPECT_EQ(SchedulerPolicyName(ParseSchedulerPolicy("shrinking-tail")), "shrinking-tail");
  EXPECT_THROW(ParseSchedulerPolicy("greedy"), Error);
}

}  // namespace
}  // namespace streamctl
