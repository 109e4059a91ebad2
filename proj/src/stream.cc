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
#include "streamctl/stream.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace streamctl {

namespace {

// Relative slack when converting times to frame indices; emit times computed
// as sums of latencies land a few ulps off exact frame boundaries.
constexpr double kFrameSlack = 1e-9;

}  // namespace

void Sequence::Validate() const {
  for (size_t i = 0; i < frames.size(); ++i) {
    const GroundTruthFrame& f = frames[i];
    if (f.frame_index != static_cast<int>(i)) {
      throw Error("schema", "sequence " + id + ": expected frame " + std::to_string(i) + ", got " +
                                std::to_string(f.frame_index));
    }
    std::set<int> tracks;
    for (const GtBox& b : f.boxes) {
      if (!b.bbox.valid()) {
        throw Error("schema", "sequence " + id + " frame " + std::to_string(i) + ": invalid box for track " +
                                  std::to_string(b.track_id));
      }
      if (!tracks.insert(b.track_id).second) {
        throw Error("schema", "sequence " + id + " frame " + std::to_string(i) + ": duplicate track " +
                                  std::to_string(b.track_id));
      }
    }
  }
  if (!(frame_period > 0.0)) throw Error("schema", "sequence " + id + ": frame period must be > 0");
}

void Corpus::RebuildCategories() {
  std::set<std::string> cats(categories.begin(), categories.end());
  for (const Sequence& s : sequences) {
    for (const GroundTruthFrame& f : s.frames) {
      for (const GtBox& b : f.boxes) cats.insert(b.category);
    }
  }
  categories.assign(cats.begin(), cats.end());
}

const Sequence& Corpus::Get(const std::string& id) const {
  for (const Sequence& s : sequences) {
    if (s.id == id) return s;
  }
  throw Error("range", "no sequence '" + id + "' in corpus");
}

SimClock::SimClock(double frame_period) : frame_period_(frame_period) {
  if (!(frame_period > 0.0)) throw Error("range", "frame period must be > 0");
}

int SimClock::newest_frame() const { return NewestFrameAt(now_, frame_period_); }

void SimClock::Advance(double dt) {
  if (!(dt >= 0.0)) throw Error("range", "clock can only advance by dt >= 0");
  now_ += dt;
}

void SimClock::AdvanceTo(double t) {
  if (t < now_) throw Error("range", "clock cannot move backwards");
  now_ = t;
}

int NewestFrameAt(double t, double frame_period) {
  return static_cast<int>(std::floor(t / frame_period + kFrameSlack));
}

double QueryInstant(int frame, double frame_period) { return (frame + kFrameSlack) * frame_period; }

std::optional<size_t> PairLatest(std::span<const PredictionRecord> predictions, double t) {
  const auto it = std::upper_bound(predictions.begin(), predictions.end(), t,
                                   [](double v, const PredictionRecord& r) { return v < r.emit_timestamp; });
  if (it == predictions.begin()) return std::nullopt;
  return static_cast<size_t>(std::distance(predictions.begin(), it) - 1);
}

std::vector<std::pair<int, int>> TemporalMismatch(std::span<const PredictionRecord> predictions,
                                                  std::span<const GroundTruthFrame> gt, double frame_period) {
  std::vector<std::pair<int, int>> out;
  out.reserve(gt.size());
  for (const GroundTruthFrame& f : gt) {
    const auto j = PairLatest(predictions, QueryInstant(f.frame_index, frame_period));
    const int mismatch = j ? f.frame_index - predictions[*j].source_frame_index : f.frame_index + 1;
    out.emplace_back(f.frame_index, mismatch);
  }
  return out;
}

double MeanTemporalMismatch(std::span<const PredictionRecord> predictions, std::span<const GroundTruthFrame> gt,
                            double frame_period) {
  const auto m = TemporalMismatch(predictions, gt, frame_period);
  if (m.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [f, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

Json BoxToJson(const Box& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

Box BoxFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("schema", "bbox must be [x1,y1,x2,y2]: " + j.dump());
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw Error("schema", "bbox needs x1 < x2 and y1 < y2: " + j.dump());
  return b;
}

Json DetectionToJson(const Detection& d) {
  Json j{{"bbox", BoxToJson(d.bbox)}, {"score", d.score}, {"cat", d.category}};
  if (d.track_id >= 0) j["track"] = d.track_id;
  return j;
}

Detection DetectionFromJson(const Json& j) {
  Detection d;
  d.bbox = BoxFromJson(j.at("bbox"));
  d.score = j.value("score", 1.0);
  if (d.score < 0.0 || d.score > 1.0) throw Error("schema", "score must be in [0,1]: " + j.dump());
  d.category = j.value("cat", std::string("object"));
  d.track_id = j.value("track", -1);
  return d;
}

Corpus ReadCorpusJsonl(const std::string& path, double frame_period) {
  std::map<std::string, std::map<int, GroundTruthFrame>> by_seq;
  std::vector<std::string> order;
  for (const Json& row : ReadJsonLines(path)) {
    const std::string seq = row.value("seq", std::string("seq0"));
    if (!by_seq.count(seq)) order.push_back(seq);
    GroundTruthFrame f;
    f.frame_index = row.at("frame").get<int>();
    for (const Json& b : row.at("boxes")) {
      f.boxes.push_back({b.at("track").get<int>(), b.at("cat").get<std::string>(), BoxFromJson(b.at("bbox"))});
    }
    if (!by_seq[seq].emplace(f.frame_index, std::move(f)).second) {
      throw Error("schema", path + ": duplicate frame in sequence " + seq);
    }
  }
  Corpus corpus;
  for (const std::string& id : order) {
    Sequence s;
    s.id = id;
    s.frame_period = frame_period;
    for (auto& [idx, f] : by_seq[id]) s.frames.push_back(std::move(f));
    s.Validate();
    corpus.sequences.push_back(std::move(s));
  }
  corpus.RebuildCategories();
  return corpus;
}

void WriteCorpusJsonl(const std::string& path, const Corpus& corpus) {
  std::vector<Json> rows;
  for (const Sequence& s : corpus.sequences) {
    for (const GroundTruthFrame& f : s.frames) {
      Json boxes = Json::array();
      for (const GtBox& b : f.boxes) boxes.push_back({{"track", b.track_id}, {"cat", b.category}, {"bbox", BoxToJson(b.bbox)}});
      rows.push_back({{"seq", s.id}, {"frame", f.frame_index}, {"boxes", boxes}});
    }
  }
  WriteJsonLines(path, rows);
}

PredictionStreams ReadPredictionsJsonl(const std::string& path, const DecisionSpace* space) {
  PredictionStreams streams;
  std::map<std::string, size_t> index;
  for (const Json& row : ReadJsonLines(path)) {
    const std::string seq = row.value("seq", std::string("seq0"));
    auto it = index.find(seq);
    if (it == index.end()) {
      it = index.emplace(seq, streams.size()).first;
      streams.emplace_back(seq, std::vector<PredictionRecord>{});
    }
    PredictionRecord r;
    r.emit_timestamp = row.at("frame_emitted_at").get<double>();
    r.source_frame_index = row.at("source_frame").get<int>();
    for (const Json& d : row.at("dets")) r.detections.push_back(DetectionFromJson(d));
    if (space && row.contains("config")) r.config_used = space->ActionFromJson(row["config"]);
    auto& vec = streams[it->second].second;
    if (!vec.empty() && r.emit_timestamp < vec.back().emit_timestamp) {
      throw Error("schema", path + ": emit timestamps must be nondecreasing within sequence " + seq);
    }
    vec.push_back(std::move(r));
  }
  return streams;
}

void WritePredictionsJsonl(const std::string& path, const PredictionStreams& streams, const DecisionSpace* space) {
  std::vector<Json> rows;
  for (const auto& [seq, records] : streams) {
    for (const PredictionRecord& r : records) {
      Json dets = Json::array();
      for (const Detection& d : r.detections) dets.push_back(DetectionToJson(d));
      Json row{{"seq", seq}, {"frame_emitted_at", r.emit_timestamp}, {"source_frame", r.source_frame_index},
               {"dets", dets}};
      if (space && !r.config_used.index.empty()) row["config"] = space->ActionToJson(r.config_used);
      rows.push_back(std::move(row));
    }
  }
  WriteJsonLines(path, rows);
}

}  // namespace streamctl
