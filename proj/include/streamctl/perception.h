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
#ifndef STREAMCTL_PERCEPTION_H_
#define STREAMCTL_PERCEPTION_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "streamctl/config_space.h"
#include "streamctl/stream.h"

namespace streamctl {

// Per-model error profile of the synthetic detector. Miss probability for a
// box of area A at scale fraction s is
//   clamp(miss_base + miss_small * exp(-A * s^2 / area_knee), 0, 1)
// so a larger scale can only lower it.
struct ModelErrorProfile {
  double miss_base = 0.0;
  double miss_small = 0.0;
  double loc_sigma_px = 0.0;  // per-coordinate jitter at full scale
  double score_noise = 0.0;
  double fp_rate = 0.0;  // expected false positives per frame
};

struct DegradationModel {
  double area_knee = 32.0 * 32.0;
  ModelErrorProfile default_profile;
  // Keyed by the label of the "model" dimension choice.
  std::map<std::string, ModelErrorProfile> models;
  // Tracker-path box jitter per frame since the last detector run, at full
  // tracker scale.
  double tracker_jitter_px_per_frame = 0.5;
  // Score perturbation applied by reduced precision (choices other than the
  // first); 0 disables it.
  double precision_score_noise = 0.0;
  double image_width = 1920.0;
  double image_height = 1200.0;

  const ModelErrorProfile& Profile(const std::string& model_label) const;
  double MissProbability(double area, double scale_fraction, const ModelErrorProfile& m) const;

  Json ToJson() const;
  static DegradationModel FromJson(const Json& j);
};

// Quality projection of an action: the dimensions that change what the
// detector outputs. Precision and tracker stride only change latency.
bool IsQualityDimension(const std::string& name);
bool IsDetectorQualityDimension(const std::string& name);
// Canonical "dim=label;..." key over detector-quality dimensions.
std::string QualityKey(const DecisionSpace& space, const Action& a);

// Where detections come from.
class DetectionSource {
 public:
  virtual ~DetectionSource() = default;
  // Detector output for `frame` under the quality projection of `action`.
  // Must be a pure function of (sequence, frame, quality projection).
  virtual std::vector<Detection> Detect(const Sequence& seq, int frame, const Action& action) const = 0;
  virtual bool synthetic() const = 0;
};

class SyntheticSource : public DetectionSource {
 public:
  SyntheticSource(DecisionSpace space, DegradationModel model, uint64_t seed);

  std::vector<Detection> Detect(const Sequence& seq, int frame, const Action& action) const override;
  bool synthetic() const override { return true; }

  // Expected fraction of the frame's boxes the detector would find at the
  // given action (misses only; the proposal cap is ignored).
  double ExpectedRecall(const GroundTruthFrame& frame, const Action& action) const;

  const DegradationModel& model() const { return model_; }
  const DecisionSpace& space() const { return space_; }
  // Scale fraction (value / max value) of the action's scale choice; 1 without
  // a scale dimension.
  double ScaleFraction(const Action& a) const;

 private:
  const ModelErrorProfile& ProfileFor(const Action& a) const;

  DecisionSpace space_;
  DegradationModel model_;
  uint64_t seed_;
};

// Prefetched detector outputs keyed by (sequence, frame, quality key).
class DetectionTrace : public DetectionSource {
 public:
  explicit DetectionTrace(DecisionSpace space) : space_(std::move(space)) {}

  void Add(const std::string& seq, int frame, const Action& action, std::vector<Detection> dets);
  std::vector<Detection> Detect(const Sequence& seq, int frame, const Action& action) const override;
  bool synthetic() const override { return false; }
  bool Contains(const std::string& seq, int frame, const Action& action) const;
  // Throws Error("schema") if some corpus frame lacks an entry for some
  // quality configuration.
  void ValidateCoverage(const Corpus& corpus) const;

  // JSONL rows {"seq"?, "frame", "action_quality": {...}, "dets": [...], "latency_s"?}.
  static DetectionTrace Load(const std::string& path, const DecisionSpace& space);
  void Save(const std::string& path) const;
  // Runs `source` over every frame and quality configuration.
  static DetectionTrace Record(const Corpus& corpus, const DetectionSource& source, const DecisionSpace& space);

 private:
  DecisionSpace space_;
  std::map<std::tuple<std::string, int, std::string>, std::vector<Detection>> entries_;
  std::map<std::string, Json> key_actions_;
};

struct TrackState {
  int track_id = -1;
  std::string category;
  double score = 1.0;
  Box last_box;
  double vx = 0.0, vy = 0.0;  // pixels per frame
  int last_frame = 0;         // frame index of the last detector update
};

using TrackSet = std::vector<TrackState>;

// Moves every track by velocity * dt_frames.
TrackSet AdvanceTracks(const TrackSet& tracks, double dt_frames);
// Constant-velocity extrapolation to detections, scores carried over.
std::vector<Detection> Forecast(const TrackSet& tracks, double dt_frames);

// Updates track state from a detector output on `frame`. Tracks are matched
// by track_id when the detections carry one, otherwise greedily by IoU >=
// iou_match within a category. Velocity is the finite difference of the last
// two matched detector positions; unmatched detections start at rest.
TrackSet UpdateTracks(const TrackSet& previous, const std::vector<Detection>& detections, int frame,
                      double iou_match = 0.3);

struct SimOptions {
  // Gaussian latency jitter, sigma as a fraction of the profile mean.
  double latency_jitter_frac = 0.0;
  uint64_t seed = 0;
};

struct InferResult {
  std::vector<Detection> detections;
  double latency_s = 0.0;
  bool detector_run = true;
};

// Stand-in for the perception algorithm on one sequence.
class PerceptionSim {
 public:
  PerceptionSim(const Sequence& seq, const DecisionSpace& space, const RuntimeProfile& profile,
                const DetectionSource& source, SimOptions options = {});

  // Detector path: detections from the source and the profile latency.
  InferResult Infer(int frame, const Action& action, int contention) const;

  // One execution with tracker-stride behaviour. With stride k the detector
  // runs on every k-th execution (and on the first); the others take the
  // tracker path, which advances the last detector output by its velocity with
  // jitter growing in frames since that run.
  InferResult Step(int frame, const Action& action, int contention);
  // Whether the next Step with `action` takes the detector path.
  bool NextIsDetector(const Action& action) const;
  // Profile latency (no jitter) of the next Step with `action`.
  double NextLatency(const Action& action, int contention) const;

  const TrackSet& tracks() const { return tracks_; }
  int executions() const { return executions_; }
  void Reset();

  const Sequence& sequence() const { return seq_; }
  const DecisionSpace& space() const { return space_; }
  const RuntimeProfile& profile() const { return profile_; }
  const DetectionSource& source() const { return source_; }

 private:
  double Jittered(double latency, int frame, uint64_t salt) const;
  int Stride(const Action& a) const;
  double TrackerScaleFraction(const Action& a) const;

  const Sequence& seq_;
  const DecisionSpace& space_;
  const RuntimeProfile& profile_;
  const DetectionSource& source_;
  SimOptions options_;
  TrackSet tracks_;
  bool has_detection_ = false;
  int since_detector_ = 0;
  int executions_ = 0;
};

enum class MotionModel { kStatic, kConstantVelocity, kRandomWalk };

// Synthetic scene generator used by gen-trace and the tests.
struct SceneSpec {
  int frames = 300;
  int min_objects = 1;
  int max_objects = 4;
  double min_side_px = 20.0;
  double max_side_px = 120.0;
  double speed_px_per_frame = 4.0;
  MotionModel motion = MotionModel::kConstantVelocity;
  // Per-frame velocity noise for kRandomWalk.
  double accel_sigma = 0.5;
  std::vector<std::string> categories = {"car"};
  double image_width = 1920.0;
  double image_height = 1200.0;
  double frame_period = kDefaultFramePeriod;

  Json ToJson() const;
  static SceneSpec FromJson(const Json& j);
};

// Objects bounce off the image border; identities persist for the sequence.
Sequence GenerateSequence(const SceneSpec& spec, const std::string& id, uint64_t seed);

MotionModel ParseMotionModel(const std::string& s);
std::string MotionModelName(MotionModel m);

}  // namespace streamctl

#endif  // STREAMCTL_PERCEPTION_H_
