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
#include "streamctl/rewards.h"

#include <algorithm>
#include <cmath>

#include "streamctl/eval.h"

namespace streamctl {

FrameLoss ParseFrameLoss(const std::string& s) {
  if (s == "iou" || s == "matched-iou") return FrameLoss::kMatchedIou;
  if (s == "ap") return FrameLoss::kAp;
  throw Error("schema", "unknown frame loss '" + s + "' (iou|ap)");
}

std::string FrameLossName(FrameLoss l) { return l == FrameLoss::kAp ? "ap" : "iou"; }

RewardMode ParseRewardMode(const std::string& s) {
  if (s == "r1") return RewardMode::kR1;
  if (s == "r2") return RewardMode::kR2;
  if (s == "trad") return RewardMode::kTraditional;
  throw Error("schema", "unknown reward '" + s + "' (r1|r2|trad)");
}

std::string RewardModeName(RewardMode m) {
  switch (m) {
    case RewardMode::kR1:
      return "r1";
    case RewardMode::kR2:
      return "r2";
    case RewardMode::kTraditional:
      return "trad";
  }
  return "r2";
}

std::vector<int> SegmentFrames(const Sequence& seq, const RewardSegment& seg) {
  const double p = seq.frame_period;
  const double slack = kTailEpsilon * p;
  const bool to_end = seg.t_end >= seq.duration() - slack;
  std::vector<int> frames;
  for (int k = std::max(0, static_cast<int>(std::ceil(seg.t_start / p - kTailEpsilon))); k < seq.size(); ++k) {
    const double arrival = k * p;
    if (arrival < seg.t_start - slack) continue;
    if (!to_end && arrival >= seg.t_end - slack) break;
    frames.push_back(k);
  }
  return frames;
}

double FrameAccuracy(const std::vector<GtBox>& gt, const std::vector<Detection>* detections, FrameLoss loss) {
  if (loss == FrameLoss::kMatchedIou) return FrameScore(gt, detections);
  if (detections == nullptr) return 0.0;
  if (gt.empty()) return detections->empty() ? 1.0 : 0.0;
  const EvalPair pair{&gt, detections};
  return EvaluatePairs(std::span<const EvalPair>(&pair, 1), EvalConfig{}).ap;
}

double SegmentLoss(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                   FrameLoss loss) {
  const auto frames = SegmentFrames(seq, seg);
  if (frames.empty()) {
    Warn("empty reward segment [" + FormatDouble(seg.t_start) + ", " + FormatDouble(seg.t_end) + ") in " + seq.id);
    return 0.0;
  }
  double sum = 0.0;
  for (int k : frames) {
    const auto j = PairLatest(stream, QueryInstant(k, seq.frame_period));
    sum += FrameAccuracy(seq.frames[k].boxes, j ? &stream[*j].detections : nullptr, loss);
  }
  return sum / static_cast<double>(frames.size());
}

double RewardR1(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                FrameLoss loss) {
  return SegmentLoss(stream, seq, seg, loss);
}

double RewardR2(std::span<const PredictionRecord> stream, std::span<const PredictionRecord> fixed_stream,
                const Sequence& seq, const RewardSegment& seg, FrameLoss loss) {
  return SegmentLoss(stream, seq, seg, loss) - SegmentLoss(fixed_stream, seq, seg, loss);
}

double RewardTraditional(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                         double lambda, FrameLoss loss) {
  const auto frames = SegmentFrames(seq, seg);
  if (frames.empty()) return 0.0;
  double mismatch = 0.0;
  for (int k : frames) {
    const auto j = PairLatest(stream, QueryInstant(k, seq.frame_period));
    mismatch += j ? k - stream[*j].source_frame_index : k + 1;
  }
  return SegmentLoss(stream, seq, seg, loss) - lambda * mismatch / static_cast<double>(frames.size());
}

double StreamingLoss(std::span<const PredictionRecord> stream, const Sequence& seq, FrameLoss loss) {
  return SegmentLoss(stream, seq, {0.0, seq.duration()}, loss);
}

const std::vector<PredictionRecord>& FixedPolicyCache::Get(const std::string& key) const {
  const auto it = streams_.find(key);
  if (it == streams_.end()) throw Error("range", "fixed-policy cache has no stream for '" + key + "'");
  return it->second;
}

void FixedPolicyCache::Save(const std::string& path, const DecisionSpace& space) const {
  PredictionStreams out(streams_.begin(), streams_.end());
  WritePredictionsJsonl(path, out, &space);
  WriteJsonFile(path + ".policy.json", Json{{"policy", space.ActionToJson(policy_)}});
}

FixedPolicyCache FixedPolicyCache::Load(const std::string& path, const DecisionSpace& space) {
  FixedPolicyCache cache(space.ActionFromJson(ReadJsonFile(path + ".policy.json").at("policy")));
  for (auto& [key, stream] : ReadPredictionsJsonl(path, &space)) cache.Put(key, std::move(stream));
  return cache;
}

std::string CacheKey(const std::string& seq_id, const ContentionSchedule& contention) {
  if (contention.max_level() == 0) return seq_id;
  std::string key = seq_id + "@";
  for (size_t i = 0; i < contention.levels.size(); ++i) key += (i ? "." : "") + std::to_string(contention.levels[i]);
  return key;
}

}  // namespace streamctl
