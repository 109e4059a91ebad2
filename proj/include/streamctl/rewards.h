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
#ifndef STREAMCTL_REWARDS_H_
#define STREAMCTL_REWARDS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "streamctl/config_space.h"
#include "streamctl/scheduler.h"
#include "streamctl/stream.h"

namespace streamctl {

// Single-frame accuracy used inside segment rewards.
enum class FrameLoss { kMatchedIou, kAp };
FrameLoss ParseFrameLoss(const std::string& s);
std::string FrameLossName(FrameLoss l);

enum class RewardMode { kR1, kR2, kTraditional };
RewardMode ParseRewardMode(const std::string& s);
std::string RewardModeName(RewardMode m);

// [t_start, t_end) in seconds; a segment whose t_end is the stream duration
// also holds the last frame.
struct RewardSegment {
  double t_start = 0.0;
  double t_end = 0.0;
};

// Frame indices whose arrival time lies in the segment.
std::vector<int> SegmentFrames(const Sequence& seq, const RewardSegment& seg);

double FrameAccuracy(const std::vector<GtBox>& gt, const std::vector<Detection>* detections, FrameLoss loss);

// Mean single-frame accuracy over the segment's frames, each paired with the
// latest record emitted by its arrival. Empty segments give 0 and a warning.
double SegmentLoss(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                   FrameLoss loss = FrameLoss::kMatchedIou);

double RewardR1(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                FrameLoss loss = FrameLoss::kMatchedIou);
double RewardR2(std::span<const PredictionRecord> stream, std::span<const PredictionRecord> fixed_stream,
                const Sequence& seq, const RewardSegment& seg, FrameLoss loss = FrameLoss::kMatchedIou);
// Additive comparison baseline: accuracy minus lambda times the mean temporal
// mismatch (frames) over the segment.
double RewardTraditional(std::span<const PredictionRecord> stream, const Sequence& seq, const RewardSegment& seg,
                         double lambda, FrameLoss loss = FrameLoss::kMatchedIou);

// R(0, T) over the whole sequence.
double StreamingLoss(std::span<const PredictionRecord> stream, const Sequence& seq,
                     FrameLoss loss = FrameLoss::kMatchedIou);

// Predictions of the fixed policy, keyed by CacheKey(sequence, contention).
class FixedPolicyCache {
 public:
  FixedPolicyCache() = default;
  explicit FixedPolicyCache(Action policy) : policy_(std::move(policy)) {}

  const Action& policy() const { return policy_; }
  void Put(const std::string& key, std::vector<PredictionRecord> stream) { streams_[key] = std::move(stream); }
  bool Contains(const std::string& key) const { return streams_.count(key) > 0; }
  // Throws Error("range") for a missing key.
  const std::vector<PredictionRecord>& Get(const std::string& key) const;
  size_t size() const { return streams_.size(); }

  // Prediction JSONL with the cache key in the "seq" field, plus a sidecar
  // "<path>.policy.json" holding the fixed action.
  void Save(const std::string& path, const DecisionSpace& space) const;
  static FixedPolicyCache Load(const std::string& path, const DecisionSpace& space);

 private:
  Action policy_;
  std::map<std::string, std::vector<PredictionRecord>> streams_;
};

// Sequence id, suffixed with the contention levels when any is nonzero.
std::string CacheKey(const std::string& seq_id, const ContentionSchedule& contention);

}  // namespace streamctl

#endif  // STREAMCTL_REWARDS_H_
