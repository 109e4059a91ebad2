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

#include <random>

#include "oracles.h"
#include "scenarios.h"
#include "streamctl/eval.h"

namespace streamctl {
namespace {

TEST(Iou, HandGeometry) {
  EXPECT_EQ(Iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_EQ(Iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_NEAR(Iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0, 1e-15);
}

TEST(AveragePrecision, SmallCases) {
  const Box g{0, 0, 10, 10};
  const std::vector<ApGroundTruth> gt = {{0, g}};
  EXPECT_EQ(AveragePrecision(std::vector<ApDetection>{{0, g, 0.9}}, gt, 0.5), 1.0);
  // False positive ranked above the true positive.
  EXPECT_DOUBLE_EQ(AveragePrecision(std::vector<ApDetection>{{0, {50, 50, 60, 60}, 0.9}, {0, g, 0.4}}, gt, 0.5), 0.5);
  EXPECT_EQ(AveragePrecision(std::vector<ApDetection>{{0, g, 0.9}, {0, {50, 50, 60, 60}, 0.4}}, gt, 0.5), 1.0);
  EXPECT_EQ(AveragePrecision({}, {}, 0.5), 1.0);
  EXPECT_EQ(AveragePrecision(std::vector<ApDetection>{{0, g, 0.9}}, {}, 0.5), 0.0);
}

TEST(AveragePrecision, MatchesBruteForce) {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 500; ++c) {
    const auto k = testing::RandomApCase(rng, 6, 4);
    for (double t : EvalConfig::DefaultIouThresholds()) {
      EXPECT_NEAR(AveragePrecision(k.dets, k.gts, t), testing::BruteForceAp(k.dets, k.gts, t),
                  testing::kApExactTolerance);
    }
  }
}

TEST(AveragePrecision, InvariantToMonotoneScoreRescaling) {
  std::mt19937_64 rng(8);
  for (int c = 0; c < 200; ++c) {
    auto k = testing::RandomApCase(rng, 6, 4);
    const double before = AveragePrecision(k.dets, k.gts, 0.5);
    for (auto& d : k.dets) d.score = 0.1 + 0.5 * d.score * d.score;
    EXPECT_EQ(AveragePrecision(k.dets, k.gts, 0.5), before);
  }
}

TEST(FrameScore, MatchedMeanIou) {
  const std::vector<GtBox> gt = {{1, "car", {0, 0, 10, 10}}, {2, "car", {20, 0, 30, 10}}};
  const std::vector<Detection> exact = {{{0, 0, 10, 10}, 0.9, "car"}, {{20, 0, 30, 10}, 0.8, "car"}};
  EXPECT_EQ(FrameScore(gt, &exact), 1.0);
  const std::vector<Detection> half = {{{0, 0, 10, 10}, 0.9, "car"}};
  EXPECT_EQ(FrameScore(gt, &half), 0.5);
  const std::vector<Detection> wrong_cat = {{{0, 0, 10, 10}, 0.9, "sign"}};
  EXPECT_EQ(FrameScore(gt, &wrong_cat), 0.0);
  EXPECT_EQ(FrameScore(gt, nullptr), 0.0);
  const std::vector<GtBox> none;
  const std::vector<Detection> empty;
  EXPECT_EQ(FrameScore(none, &empty), 1.0);
  EXPECT_EQ(FrameScore(none, &exact), 0.0);
}

Sequence MovingBox(int frames, double speed) {
  Sequence s;
  s.id = "m";
  for (int i = 0; i < frames; ++i) s.frames.push_back({i, {{1, "car", {i * speed, 0, i * speed + 10, 10}}}});
  return s;
}

TEST(Offline, PerfectAndEmpty) {
  const Sequence s = MovingBox(5, 3.0);
  std::map<int, std::vector<Detection>> perfect, empty;
  for (const auto& f : s.frames) {
    perfect[f.frame_index] = {{f.boxes[0].bbox, 1.0, "car"}};
    empty[f.frame_index] = {};
  }
  EXPECT_EQ(EvaluateOffline(perfect, s, {}).ap, 1.0);
  EXPECT_EQ(EvaluateOffline(empty, s, {}).ap, 0.0);
  perfect.erase(3);
  try {
    EvaluateOffline(perfect, s, {});
    FAIL() << "expected a schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "schema");
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(Offline, TwoFrameTwoClassAgainstBruteForce) {
  Sequence s;
  s.id = "toy";
  s.frames = {{0, {{1, "car", {0, 0, 4, 4}}, {2, "sign", {5, 5, 7, 7}}}}, {1, {{1, "car", {1, 0, 5, 4}}}}};
  std::map<int, std::vector<Detection>> d;
  d[0] = {{{0, 0, 4, 3}, 0.8, "car"}, {{5, 5, 7, 8}, 0.6, "sign"}, {{2, 2, 6, 6}, 0.7, "car"}};
  d[1] = {{{1, 0, 5, 4}, 0.4, "car"}, {{0, 0, 2, 2}, 0.9, "sign"}};
  const EvalConfig cfg;
  double expect = 0.0;
  for (const std::string cat : {"car", "sign"}) {
    std::vector<ApDetection> dets;
    std::vector<ApGroundTruth> gts;
    for (int f = 0; f < 2; ++f) {
      for (const auto& b : s.frames[f].boxes) {
        if (b.category == cat) gts.push_back({f, b.bbox});
      }
      for (const auto& x : d[f]) {
        if (x.category == cat) dets.push_back({f, x.bbox, x.score});
      }
    }
    for (double t : cfg.iou_thresholds) expect += testing::BruteForceAp(dets, gts, t);
  }
  expect /= 2.0 * cfg.iou_thresholds.size();
  EXPECT_NEAR(EvaluateOffline(d, s, cfg).ap, expect, 1e-15);
}

TEST(Streaming, ZeroLatencyEqualsOffline) {
  const Sequence s = MovingBox(20, 2.0);
  std::vector<PredictionRecord> p;
  for (const auto& f : s.frames) p.push_back({{{f.boxes[0].bbox, 1.0, "car"}}, s.timestamp(f.frame_index), f.frame_index, {}});
  const std::vector<StreamAndTruth> runs = {{&p, &s}};
  const EvalReport r = EvaluateStream(runs, {});
  EXPECT_EQ(r.ap, 1.0);
  EXPECT_EQ(r.offline_map, 1.0);
}

TEST(Streaming, OneFrameDelayDestroysFastObjects) {
  // Objects move more than a box width per frame.
  const Sequence s = MovingBox(20, 12.0);
  std::vector<PredictionRecord> p;
  for (const auto& f : s.frames) {
    p.push_back({{{f.boxes[0].bbox, 1.0, "car"}}, s.timestamp(f.frame_index + 1), f.frame_index, {}});
  }
  EvalConfig at50;
  at50.iou_thresholds = {0.5};
  const std::vector<StreamAndTruth> runs = {{&p, &s}};
  const EvalReport r = EvaluateStream(runs, at50);
  EXPECT_EQ(r.ap, 0.0);
  EXPECT_EQ(r.offline_map, 1.0);
}

TEST(Streaming, DelayNeverHelps) {
  auto w = testing::PlantedContextWorld(0, 2, 3);
  const Action a{{1, 1}};
  double prev = 2.0;
  for (int delay = 0; delay <= 4; ++delay) {
    std::vector<std::vector<PredictionRecord>> streams;
    for (const Sequence& s : w->test.sequences) {
      std::vector<PredictionRecord> p;
      for (int i = 0; i < s.size(); ++i) p.push_back({w->source->Detect(s, i, a), s.timestamp(i + delay), i, a});
      streams.push_back(std::move(p));
    }
    std::vector<StreamAndTruth> runs;
    for (size_t i = 0; i < streams.size(); ++i) runs.push_back({&streams[i], &w->test.sequences[i]});
    const double sap = EvaluateStream(runs, {}).ap;
    EXPECT_LE(sap, prev + 1e-12) << "delay " << delay;
    prev = sap;
  }
}

TEST(Streaming, NoPairingAcrossSequences) {
  const Sequence a = MovingBox(3, 0.0);
  Sequence b = a;
  b.id = "b";
  const std::vector<PredictionRecord> pa = {{{{a.frames[0].boxes[0].bbox, 1.0, "car"}}, 0.0, 0, {}}};
  const std::vector<PredictionRecord> pb;
  const std::vector<StreamAndTruth> runs = {{&pa, &a}, {&pb, &b}};
  // b has no outputs, so half of the ground truth is missed.
  EvalConfig at50;
  at50.iou_thresholds = {0.5};
  EXPECT_DOUBLE_EQ(EvaluateStream(runs, at50).ap, 0.5);
}

TEST(EvalConfig, Validation) {
  EvalConfig c;
  c.iou_thresholds = {0.5, 0.5};
  EXPECT_THROW(c.Validate(), Error);
  c.iou_thresholds = {1.2};
  EXPECT_THROW(c.Validate(), Error);
}

}  // namespace
}  // namespace streamctl
