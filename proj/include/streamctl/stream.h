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
#ifndef STREAMCTL_STREAM_H_
#define STREAMCTL_STREAM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streamctl/config_space.h"
#include "streamctl/util.h"

namespace streamctl {

inline constexpr double kDefaultFramePeriod = 1.0 / 30.0;

// Axis-aligned box in pixels, (x1, y1) top-left, (x2, y2) bottom-right.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 < x2 && y1 < y2; }
  Box Translated(double dx, double dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }
  bool operator==(const Box&) const = default;
};

struct TimestampedFrame {
  int64_t frame_index = 0;
  double timestamp = 0.0;
  std::string sequence_id;
};

struct GtBox {
  int track_id = 0;
  std::string category;
  Box bbox;
};

struct GroundTruthFrame {
  int frame_index = 0;
  std::vector<GtBox> boxes;
};

struct Detection {
  Box bbox;
  double score = 1.0;
  std::string category;
  // Identity carried through from synthetic ground truth; -1 when unknown.
  int track_id = -1;
};

struct PredictionRecord {
  std::vector<Detection> detections;
  double emit_timestamp = 0.0;
  int source_frame_index = 0;
  Action config_used;
};

// A fixed-rate ground-truth stream. frames[i].frame_index == i.
struct Sequence {
  std::string id;
  double frame_period = kDefaultFramePeriod;
  std::vector<GroundTruthFrame> frames;

  int size() const { return static_cast<int>(frames.size()); }
  double timestamp(int frame) const { return frame * frame_period; }
  // End of the stream: the instant the frame after the last one would arrive.
  double duration() const { return size() * frame_period; }
  TimestampedFrame frame(int i) const { return {i, timestamp(i), id}; }

  // Throws Error("schema") on non-contiguous indices, invalid boxes or
  // duplicate track ids within a frame.
  void Validate() const;
};

struct Corpus {
  std::vector<Sequence> sequences;
  // Sorted union of categories; defines the context count layout.
  std::vector<std::string> categories;

  void RebuildCategories();
  const Sequence& Get(const std::string& id) const;
};

// Simulated wall clock. Time only moves forward.
class SimClock {
 public:
  explicit SimClock(double frame_period = kDefaultFramePeriod);

  double now() const { return now_; }
  double frame_period() const { return frame_period_; }
  double now_in_frames() const { return now_ / frame_period_; }
  // Newest frame whose arrival time is <= now (ties count as arrived).
  int newest_frame() const;

  void Advance(double dt);
  void AdvanceTo(double t);

 private:
  double now_ = 0.0;
  double frame_period_;
};

// Newest frame arrived by time t at the given period; ties count as arrived.
int NewestFrameAt(double t, double frame_period);

// Instant at which frame `frame` is scored. It sits a billionth of a frame
// after the arrival time so that outputs whose emit time was accumulated from
// latencies and lands on the boundary within rounding still count.
double QueryInstant(int frame, double frame_period);

// φ(t): index of the record with the largest emit_timestamp <= t, or nullopt
// if nothing has been emitted yet. Among equal timestamps the last record wins.
std::optional<size_t> PairLatest(std::span<const PredictionRecord> predictions, double t);

// Per-frame lag (in frames) between each ground-truth frame and the source of
// the latest available prediction; frame_index + 1 before any output exists.
std::vector<std::pair<int, int>> TemporalMismatch(std::span<const PredictionRecord> predictions,
                                                  std::span<const GroundTruthFrame> gt,
                                                  double frame_period = kDefaultFramePeriod);
double MeanTemporalMismatch(std::span<const PredictionRecord> predictions,
                            std::span<const GroundTruthFrame> gt,
                            double frame_period = kDefaultFramePeriod);

// JSON forms shared by all stream files.
Json BoxToJson(const Box& b);
Box BoxFromJson(const Json& j);
Json DetectionToJson(const Detection& d);
Detection DetectionFromJson(const Json& j);

// Ground truth JSONL: {"frame": int, "boxes": [{"track","cat","bbox"}]} plus an
// optional "seq" id (default "seq0") so one file can hold a corpus.
Corpus ReadCorpusJsonl(const std::string& path, double frame_period = kDefaultFramePeriod);
void WriteCorpusJsonl(const std::string& path, const Corpus& corpus);

// Prediction JSONL: {"frame_emitted_at", "source_frame", "dets", "seq"?, "config"?}.
using PredictionStreams = std::vector<std::pair<std::string, std::vector<PredictionRecord>>>;
PredictionStreams ReadPredictionsJsonl(const std::string& path, const DecisionSpace* space = nullptr);
void WritePredictionsJsonl(const std::string& path, const PredictionStreams& streams,
                           const DecisionSpace* space = nullptr);

}  // namespace streamctl

#endif  // STREAMCTL_STREAM_H_
