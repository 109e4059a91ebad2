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
#ifndef STREAMCTL_EVAL_H_
#define STREAMCTL_EVAL_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "streamctl/stream.h"

namespace streamctl {

struct EvalConfig {
  std::vector<double> iou_thresholds = DefaultIouThresholds();
  // COCO area buckets: small < small_max_area <= medium < medium_max_area <= large.
  double small_max_area = 32.0 * 32.0;
  double medium_max_area = 96.0 * 96.0;

  static std::vector<double> DefaultIouThresholds();  // 0.50:0.05:0.95
  void Validate() const;
};

struct EvalReport {
  bool streaming = false;
  // Mean AP over categories and thresholds, plus the 0.50 / 0.75 means. For a
  // streaming report these are sAP, sAP50 and sAP75.
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::map<std::string, double> per_category;
  // Offline mAP, filled by EvaluateStream alongside the streaming numbers.
  double offline_map = 0.0;
  int frames = 0;

  Json ToJson() const;
  std::string ToCsv() const;
};

double Iou(const Box& a, const Box& b);

// One class, many images. `image` ids group detections with ground truth.
struct ApDetection {
  int image = 0;
  Box box;
  double score = 0.0;
};
struct ApGroundTruth {
  int image = 0;
  Box box;
};

// All-point interpolated AP. Detections are matched in descending score order
// (ties: lower input index first) to the highest-IoU unmatched ground truth in
// the same image with IoU >= iou_threshold. Empty ground truth yields 1.0 when
// there are no detections and 0.0 otherwise.
double AveragePrecision(std::span<const ApDetection> detections, std::span<const ApGroundTruth> gt,
                        double iou_threshold);

// Single-frame accuracy in [0,1]: detections in descending score order are
// greedily matched to the same-category unmatched ground truth of highest IoU
// (IoU > 0), and the matched IoUs are summed over |GT|. Empty ground truth
// scores 1 with no detections and 0 otherwise; a null list means nothing was
// available and scores 0.
double FrameScore(const std::vector<GtBox>& gt, const std::vector<Detection>* detections);

// One scored image: its ground truth and the detections assigned to it.
struct EvalPair {
  const std::vector<GtBox>* gt = nullptr;
  const std::vector<Detection>* detections = nullptr;
};

// Pools every pair as one image and averages AP over categories that have at
// least one ground-truth box, and over the configured thresholds.
EvalReport EvaluatePairs(std::span<const EvalPair> pairs, const EvalConfig& cfg);

// Offline mAP: detections keyed by frame index, latency ignored. Throws
// Error("schema") listing ground-truth frames that have no entry.
EvalReport EvaluateOffline(const std::map<int, std::vector<Detection>>& per_frame_detections,
                           const Sequence& gt, const EvalConfig& cfg);

// Streaming AP: every ground-truth frame is paired with φ(t) of its arrival
// time; frames before the first output are scored against no detections.
EvalReport EvaluateStreaming(std::span<const PredictionRecord> stream, const Sequence& gt,
                             const EvalConfig& cfg);

// Corpus-level streaming evaluation. The prediction stream is reset per
// sequence, so nothing pairs across a boundary. Also computes offline mAP from
// the same records re-indexed by source frame (unprocessed frames count as
// empty).
struct StreamAndTruth {
  const std::vector<PredictionRecord>* stream = nullptr;
  const Sequence* gt = nullptr;
};
EvalReport EvaluateStream(std::span<const StreamAndTruth> runs, const EvalConfig& cfg);

// Detections per frame recovered from a stream by source frame (the latest
// record wins when a frame was emitted more than once).
std::map<int, std::vector<Detection>> OfflineView(std::span<const PredictionRecord> stream, int frame_count);

}  // namespace streamctl

#endif  // STREAMCTL_EVAL_H_
