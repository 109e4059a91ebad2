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
#include "streamctl/perception.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "streamctl/eval.h"

namespace streamctl {

namespace {

Json ProfileToJson(const ModelErrorProfile& m) {
  return Json{{"miss_base", m.miss_base},       {"miss_small", m.miss_small}, {"loc_sigma_px", m.loc_sigma_px},
              {"score_noise", m.score_noise}, {"fp_rate", m.fp_rate}};
}

ModelErrorProfile ProfileFromJson(const Json& j) {
  ModelErrorProfile m;
  m.miss_base = j.value("miss_base", 0.0);
  m.miss_small = j.value("miss_small", 0.0);
  m.loc_sigma_px = j.value("loc_sigma_px", 0.0);
  m.score_noise = j.value("score_noise", 0.0);
  m.fp_rate = j.value("fp_rate", 0.0);
  return m;
}

std::optional<double> NumericChoice(const DecisionSpace& space, const Action& a, const char* dim) {
  const auto d = space.Find(dim);
  if (!d) return std::nullopt;
  return space.dimension(*d).choices[a.index[*d]].value;
}

double MaxNumericChoice(const DecisionDimension& dim) {
  double m = 0.0;
  for (const Choice& c : dim.choices) {
    if (c.value) m = std::max(m, *c.value);
  }
  return m;
}

}  // namespace

const ModelErrorProfile& DegradationModel::Profile(const std::string& model_label) const {
  const auto it = models.find(model_label);
  return it == models.end() ? default_profile : it->second;
}

double DegradationModel::MissProbability(double area, double scale_fraction, const ModelErrorProfile& m) const {
  const double effective = area * scale_fraction * scale_fraction;
  const double p = m.miss_base + m.miss_small * std::exp(-effective / area_knee);
  return std::clamp(p, 0.0, 1.0);
}

Json DegradationModel::ToJson() const {
  Json models_json = Json::object();
  for (const auto& [name, m] : models) models_json[name] = ProfileToJson(m);
  return Json{{"area_knee", area_knee},
              {"default", ProfileToJson(default_profile)},
              {"models", models_json},
              {"tracker_jitter_px_per_frame", tracker_jitter_px_per_frame},
              {"precision_score_noise", precision_score_noise},
              {"image_width", image_width},
              {"image_height", image_height}};
}

DegradationModel DegradationModel::FromJson(const Json& j) {
  DegradationModel d;
  d.area_knee = j.value("area_knee", d.area_knee);
  if (j.contains("default")) d.default_profile = ProfileFromJson(j["default"]);
  if (j.contains("models")) {
    for (const auto& [name, m] : j["models"].items()) d.models[name] = ProfileFromJson(m);
  }
  d.tracker_jitter_px_per_frame = j.value("tracker_jitter_px_per_frame", d.tracker_jitter_px_per_frame);
  d.precision_score_noise = j.value("precision_score_noise", d.precision_score_noise);
  d.image_width = j.value("image_width", d.image_width);
  d.image_height = j.value("image_height", d.image_height);
  if (!(d.area_knee > 0.0)) throw Error("schema", "area_knee must be > 0");
  return d;
}

bool IsQualityDimension(const std::string& name) {
  return name != kDimPrecision && name != kDimTrackerStride;
}

bool IsDetectorQualityDimension(const std::string& name) {
  return IsQualityDimension(name) && name != kDimTrackerScale;
}

std::string QualityKey(const DecisionSpace& space, const Action& a) {
  std::string key;
  for (size_t i = 0; i < space.dimension_count(); ++i) {
    const auto& d = space.dimension(i);
    if (!IsDetectorQualityDimension(d.name)) continue;
    if (!key.empty()) key += ';';
    key += d.name + "=" + d.choices.at(a.index.at(i)).label;
  }
  return key;
}

SyntheticSource::SyntheticSource(DecisionSpace space, DegradationModel model, uint64_t seed)
    : space_(std::move(space)), model_(std::move(model)), seed_(seed) {}

double SyntheticSource::ScaleFraction(const Action& a) const {
  const auto d = space_.Find(kDimScale);
  if (!d) return 1.0;
  const auto& dim = space_.dimension(*d);
  const auto v = dim.choices[a.index[*d]].value;
  const double max_v = MaxNumericChoice(dim);
  if (v && max_v > 0.0) return *v / max_v;
  // Symbolic scales: evenly spaced by position, largest last.
  return static_cast<double>(a.index[*d] + 1) / static_cast<double>(dim.size());
}

const ModelErrorProfile& SyntheticSource::ProfileFor(const Action& a) const {
  const auto d = space_.Find(kDimModel);
  if (!d) return model_.default_profile;
  return model_.Profile(space_.dimension(*d).choices[a.index[*d]].label);
}

double SyntheticSource::ExpectedRecall(const GroundTruthFrame& frame, const Action& action) const {
  if (frame.boxes.empty()) return 1.0;
  const double s = ScaleFraction(action);
  const ModelErrorProfile& m = ProfileFor(action);
  double sum = 0.0;
  for (const GtBox& b : frame.boxes) sum += 1.0 - model_.MissProbability(b.bbox.area(), s, m);
  return sum / static_cast<double>(frame.boxes.size());
}

std::vector<Detection> SyntheticSource::Detect(const Sequence& seq, int frame, const Action& action) const {
  if (frame < 0 || frame >= seq.size()) {
    throw Error("range", "frame " + std::to_string(frame) + " outside sequence " + seq.id);
  }
  space_.Validate(action);
  const auto precision = space_.Find(kDimPrecision);
  const int precision_idx = precision ? action.index[*precision] : 0;
  std::mt19937_64 rng(MixSeed({seed_, Fnv1a(seq.id), static_cast<uint64_t>(frame),
                               Fnv1a(QualityKey(space_, action)),
                               static_cast<uint64_t>(model_.precision_score_noise > 0.0 ? precision_idx : 0)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double s = ScaleFraction(action);
  const ModelErrorProfile& m = ProfileFor(action);
  const double sigma = m.loc_sigma_px / s;
  std::vector<Detection> dets;
  for (const GtBox& b : seq.frames[frame].boxes) {
    // Every draw happens whether or not the box is missed so that the random
    // stream stays aligned across configurations.
    const double u = unit(rng);
    const double n1 = gauss(rng), n2 = gauss(rng), n3 = gauss(rng), n4 = gauss(rng), ns = gauss(rng);
    if (u < model_.MissProbability(b.bbox.area(), s, m)) continue;
    Detection d;
    d.category = b.category;
    d.track_id = b.track_id;
    d.bbox = {b.bbox.x1 + sigma * n1, b.bbox.y1 + sigma * n2, b.bbox.x2 + sigma * n3, b.bbox.y2 + sigma * n4};
    if (d.bbox.x2 <= d.bbox.x1 + 1.0) d.bbox.x2 = d.bbox.x1 + 1.0;
    if (d.bbox.y2 <= d.bbox.y1 + 1.0) d.bbox.y2 = d.bbox.y1 + 1.0;
    d.score = std::clamp(1.0 - m.score_noise * std::abs(ns), 0.01, 1.0);
    dets.push_back(std::move(d));
  }
  if (m.fp_rate > 0.0) {
    std::poisson_distribution<int> count(m.fp_rate);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double w = 20.0 + 80.0 * unit(rng), h = 20.0 + 80.0 * unit(rng);
      const double x = unit(rng) * (model_.image_width - w), y = unit(rng) * (model_.image_height - h);
      Detection d;
      d.bbox = {x, y, x + w, y + h};
      d.score = std::clamp(0.6 * unit(rng), 0.01, 1.0);
      d.category = seq.frames[frame].boxes.empty() ? "object" : seq.frames[frame].boxes.front().category;
      dets.push_back(std::move(d));
    }
  }
  if (precision_idx > 0 && model_.precision_score_noise > 0.0) {
    for (Detection& d : dets) d.score = std::clamp(d.score + model_.precision_score_noise * gauss(rng), 0.01, 1.0);
  }
  if (const auto cap = NumericChoice(space_, action, kDimProposals)) {
    const size_t n = static_cast<size_t>(std::max(0.0, *cap));
    if (dets.size() > n) {
      std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
      dets.resize(n);
    }
  }
  return dets;
}

void DetectionTrace::Add(const std::string& seq, int frame, const Action& action, std::vector<Detection> dets) {
  const std::string key = QualityKey(space_, action);
  entries_[{seq, frame, key}] = std::move(dets);
  if (!key_actions_.count(key)) {
    Json q = Json::object();
    for (size_t i = 0; i < space_.dimension_count(); ++i) {
      const auto& d = space_.dimension(i);
      if (IsDetectorQualityDimension(d.name)) q[d.name] = d.choices[action.index[i]].ToJson();
    }
    key_actions_[key] = q;
  }
}

bool DetectionTrace::Contains(const std::string& seq, int frame, const Action& action) const {
  return entries_.count({seq, frame, QualityKey(space_, action)}) > 0;
}

std::vector<Detection> DetectionTrace::Detect(const Sequence& seq, int frame, const Action& action) const {
  const auto it = entries_.find({seq.id, frame, QualityKey(space_, action)});
  if (it == entries_.end()) {
    throw Error("range", "trace has no entry for sequence " + seq.id + " frame " + std::to_string(frame) +
                             " quality " + QualityKey(space_, action));
  }
  return it->second;
}

void DetectionTrace::ValidateCoverage(const Corpus& corpus) const {
  std::set<std::string> keys;
  for (size_t flat = 0; flat < space_.flat_size(); ++flat) keys.insert(QualityKey(space_, Unflatten(flat, space_)));
  for (const Sequence& s : corpus.sequences) {
    for (int f = 0; f < s.size(); ++f) {
      for (const std::string& k : keys) {
        if (!entries_.count({s.id, f, k})) {
          throw Error("schema", "trace misses sequence " + s.id + " frame " + std::to_string(f) + " quality " + k);
        }
      }
    }
  }
}

DetectionTrace DetectionTrace::Load(const std::string& path, const DecisionSpace& space) {
  DetectionTrace trace(space);
  for (const Json& row : ReadJsonLines(path)) {
    // Fill non-quality dimensions with their first choice; they do not enter
    // the key.
    Action a;
    a.index.assign(space.dimension_count(), 0);
    const Json& q = row.at("action_quality");
    for (size_t i = 0; i < space.dimension_count(); ++i) {
      const auto& d = space.dimension(i);
      if (!IsDetectorQualityDimension(d.name)) continue;
      const auto it = q.find(d.name);
      if (it == q.end()) throw Error("schema", path + ": action_quality misses dimension " + d.name);
      const auto idx = d.Find(*it);
      if (!idx) throw Error("schema", path + ": unknown choice " + it->dump() + " for " + d.name);
      a.index[i] = static_cast<int>(*idx);
    }
    std::vector<Detection> dets;
    for (const Json& d : row.at("dets")) dets.push_back(DetectionFromJson(d));
    trace.Add(row.value("seq", std::string("seq0")), row.at("frame").get<int>(), a, std::move(dets));
  }
  return trace;
}

void DetectionTrace::Save(const std::string& path) const {
  std::vector<Json> rows;
  rows.reserve(entries_.size());
  for (const auto& [key, dets] : entries_) {
    Json jd = Json::array();
    for (const Detection& d : dets) jd.push_back(DetectionToJson(d));
    rows.push_back({{"seq", std::get<0>(key)},
                    {"frame", std::get<1>(key)},
                    {"action_quality", key_actions_.at(std::get<2>(key))},
                    {"dets", jd}});
  }
  WriteJsonLines(path, rows);
}

DetectionTrace DetectionTrace::Record(const Corpus& corpus, const DetectionSource& source,
                                      const DecisionSpace& space) {
  DetectionTrace trace(space);
  std::set<std::string> seen;
  std::vector<Action> quality_actions;
  for (size_t flat = 0; flat < space.flat_size(); ++flat) {
    const Action a = Unflatten(flat, space);
    if (seen.insert(QualityKey(space, a)).second) quality_actions.push_back(a);
  }
  for (const Sequence& s : corpus.sequences) {
    for (int f = 0; f < s.size(); ++f) {
      for (const Action& a : quality_actions) trace.Add(s.id, f, a, source.Detect(s, f, a));
    }
  }
  return trace;
}

TrackSet AdvanceTracks(const TrackSet& tracks, double dt_frames) {
  TrackSet out = tracks;
  for (TrackState& t : out) t.last_box = t.last_box.Translated(t.vx * dt_frames, t.vy * dt_frames);
  return out;
}

std::vector<Detection> Forecast(const TrackSet& tracks, double dt_frames) {
  std::vector<Detection> dets;
  dets.reserve(tracks.size());
  for (const TrackState& t : tracks) {
    dets.push_back({t.last_box.Translated(t.vx * dt_frames, t.vy * dt_frames), t.score, t.category, t.track_id});
  }
  return dets;
}

TrackSet UpdateTracks(const TrackSet& previous, const std::vector<Detection>& detections, int frame,
                      double iou_match) {
  int next_id = 1 << 20;
  for (const TrackState& t : previous) next_id = std::max(next_id, t.track_id + 1);

  std::vector<size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return detections[a].score > detections[b].score; });

  std::vector<bool> used(previous.size(), false);
  TrackSet out(detections.size());
  for (size_t di : order) {
    const Detection& d = detections[di];
    int match = -1;
    if (d.track_id >= 0) {
      for (size_t p = 0; p < previous.size(); ++p) {
        if (!used[p] && previous[p].track_id == d.track_id) {
          match = static_cast<int>(p);
          break;
        }
      }
    } else {
      double best = iou_match;
      for (size_t p = 0; p < previous.size(); ++p) {
        if (used[p] || previous[p].category != d.category) continue;
        const double v = Iou(previous[p].last_box, d.bbox);
        if (v >= best) {
          best = v;
          match = static_cast<int>(p);
        }
      }
    }
    TrackState t;
    t.category = d.category;
    t.score = d.score;
    t.last_box = d.bbox;
    t.last_frame = frame;
    if (match >= 0) {
      used[match] = true;
      const TrackState& p = previous[match];
      t.track_id = p.track_id;
      const int gap = frame - p.last_frame;
      if (gap > 0) {
        const double cx = 0.5 * (d.bbox.x1 + d.bbox.x2) - 0.5 * (p.last_box.x1 + p.last_box.x2);
        const double cy = 0.5 * (d.bbox.y1 + d.bbox.y2) - 0.5 * (p.last_box.y1 + p.last_box.y2);
        t.vx = cx / gap;
        t.vy = cy / gap;
      }
    } else {
      t.track_id = d.track_id >= 0 ? d.track_id : next_id++;
    }
    out[di] = t;
  }
  return out;
}

PerceptionSim::PerceptionSim(const Sequence& seq, const DecisionSpace& space, const RuntimeProfile& profile,
                             const DetectionSource& source, SimOptions options)
    : seq_(seq), space_(space), profile_(profile), source_(source), options_(options) {}

void PerceptionSim::Reset() {
  tracks_.clear();
  has_detection_ = false;
  since_detector_ = 0;
  executions_ = 0;
}

double PerceptionSim::Jittered(double latency, int frame, uint64_t salt) const {
  if (options_.latency_jitter_frac <= 0.0) return latency;
  std::mt19937_64 rng(MixSeed({options_.seed, Fnv1a(seq_.id), static_cast<uint64_t>(frame), salt,
                               static_cast<uint64_t>(executions_)}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  return std::max(0.1 * latency, latency * (1.0 + options_.latency_jitter_frac * gauss(rng)));
}

int PerceptionSim::Stride(const Action& a) const {
  const auto d = space_.Find(kDimTrackerStride);
  if (!d) return 1;
  const auto& c = space_.dimension(*d).choices[a.index[*d]];
  return c.value ? std::max(1, static_cast<int>(std::lround(*c.value))) : 1;
}

double PerceptionSim::TrackerScaleFraction(const Action& a) const {
  const auto d = space_.Find(kDimTrackerScale);
  if (!d) return 1.0;
  const auto& dim = space_.dimension(*d);
  const auto v = dim.choices[a.index[*d]].value;
  const double max_v = MaxNumericChoice(dim);
  return (v && max_v > 0.0) ? *v / max_v : 1.0;
}

InferResult PerceptionSim::Infer(int frame, const Action& action, int contention) const {
  InferResult r;
  r.detections = source_.Detect(seq_, frame, action);
  r.latency_s = Jittered(LookupLatency(profile_, action, contention), frame, 1);
  r.detector_run = true;
  return r;
}

bool PerceptionSim::NextIsDetector(const Action& action) const {
  return !has_detection_ || since_detector_ + 1 >= Stride(action);
}

double PerceptionSim::NextLatency(const Action& action, int contention) const {
  return NextIsDetector(action) ? LookupLatency(profile_, action, contention)
                                : LookupTrackerLatency(profile_, action, contention);
}

InferResult PerceptionSim::Step(int frame, const Action& action, int contention) {
  InferResult r;
  if (NextIsDetector(action)) {
    r = Infer(frame, action, contention);
    tracks_ = UpdateTracks(tracks_, r.detections, frame);
    has_detection_ = true;
    since_detector_ = 0;
  } else {
    ++since_detector_;
    r.detector_run = false;
    r.latency_s = Jittered(LookupTrackerLatency(profile_, action, contention), frame, 2);
    r.detections.reserve(tracks_.size());
    std::mt19937_64 rng(MixSeed({options_.seed, Fnv1a(seq_.id), static_cast<uint64_t>(frame), 0x747261636bULL,
                                 static_cast<uint64_t>(since_detector_)}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto* synth = dynamic_cast<const SyntheticSource*>(&source_);
    const double rate = synth ? synth->model().tracker_jitter_px_per_frame : 0.5;
    const double scale = TrackerScaleFraction(action);
    for (const TrackState& t : tracks_) {
      const double dt = frame - t.last_frame;
      const double sigma = rate * dt / scale;
      Box b = t.last_box.Translated(t.vx * dt, t.vy * dt);
      b = {b.x1 + sigma * gauss(rng), b.y1 + sigma * gauss(rng), b.x2 + sigma * gauss(rng), b.y2 + sigma * gauss(rng)};
      if (b.x2 <= b.x1 + 1.0) b.x2 = b.x1 + 1.0;
      if (b.y2 <= b.y1 + 1.0) b.y2 = b.y1 + 1.0;
      r.detections.push_back({b, t.score, t.category, t.track_id});
    }
  }
  ++executions_;
  return r;
}

Json SceneSpec::ToJson() const {
  return Json{{"frames", frames},
              {"min_objects", min_objects},
              {"max_objects", max_objects},
              {"min_side_px", min_side_px},
              {"max_side_px", max_side_px},
              {"speed_px_per_frame", speed_px_per_frame},
              {"motion", MotionModelName(motion)},
              {"accel_sigma", accel_sigma},
              {"categories", categories},
              {"image_width", image_width},
              {"image_height", image_height},
              {"frame_period", frame_period}};
}

SceneSpec SceneSpec::FromJson(const Json& j) {
  SceneSpec s;
  s.frames = j.value("frames", s.frames);
  s.min_objects = j.value("min_objects", s.min_objects);
  s.max_objects = j.value("max_objects", s.max_objects);
  s.min_side_px = j.value("min_side_px", s.min_side_px);
  s.max_side_px = j.value("max_side_px", s.max_side_px);
  s.speed_px_per_frame = j.value("speed_px_per_frame", s.speed_px_per_frame);
  if (j.contains("motion")) s.motion = ParseMotionModel(j["motion"].get<std::string>());
  s.accel_sigma = j.value("accel_sigma", s.accel_sigma);
  if (j.contains("categories")) s.categories = j["categories"].get<std::vector<std::string>>();
  s.image_width = j.value("image_width", s.image_width);
  s.image_height = j.value("image_height", s.image_height);
  s.frame_period = j.value("frame_period", s.frame_period);
  if (s.frames < 1 || s.min_objects < 0 || s.max_objects < s.min_objects || s.categories.empty() ||
      !(s.min_side_px > 0.0) || s.max_side_px < s.min_side_px) {
    throw Error("schema", "invalid scene spec: " + j.dump());
  }
  return s;
}

MotionModel ParseMotionModel(const std::string& s) {
  if (s == "static") return MotionModel::kStatic;
  if (s == "constant_velocity" || s == "cv") return MotionModel::kConstantVelocity;
  if (s == "random_walk") return MotionModel::kRandomWalk;
  throw Error("schema", "unknown motion model '" + s + "' (static|constant_velocity|random_walk)");
}

std::string MotionModelName(MotionModel m) {
  switch (m) {
    case MotionModel::kStatic:
      return "static";
    case MotionModel::kConstantVelocity:
      return "constant_velocity";
    case MotionModel::kRandomWalk:
      return "random_walk";
  }
  return "unknown";
}

Sequence GenerateSequence(const SceneSpec& spec, const std::string& id, uint64_t seed) {
  std::mt19937_64 rng(MixSeed({seed, Fnv1a(id)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  struct Object {
    int track;
    std::string category;
    double x, y, w, h, vx, vy;
  };
  const int n = spec.min_objects + static_cast<int>(unit(rng) * (spec.max_objects - spec.min_objects + 1) - 1e-12);
  std::vector<Object> objects;
  for (int i = 0; i < n; ++i) {
    Object o;
    o.track = i + 1;
    o.category = spec.categories[static_cast<size_t>(unit(rng) * spec.categories.size()) % spec.categories.size()];
    o.w = spec.min_side_px + unit(rng) * (spec.max_side_px - spec.min_side_px);
    o.h = o.w * (0.75 + 0.25 * unit(rng));
    o.x = unit(rng) * (spec.image_width - o.w);
    o.y = unit(rng) * (spec.image_height - o.h);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double speed = spec.motion == MotionModel::kStatic ? 0.0 : spec.speed_px_per_frame;
    o.vx = speed * std::cos(angle);
    o.vy = speed * std::sin(angle);
    objects.push_back(o);
  }

  Sequence seq;
  seq.id = id;
  seq.frame_period = spec.frame_period;
  for (int f = 0; f < spec.frames; ++f) {
    GroundTruthFrame frame;
    frame.frame_index = f;
    for (const Object& o : objects) frame.boxes.push_back({o.track, o.category, {o.x, o.y, o.x + o.w, o.y + o.h}});
    seq.frames.push_back(std::move(frame));
    for (Object& o : objects) {
      if (spec.motion == MotionModel::kRandomWalk) {
        o.vx += spec.accel_sigma * gauss(rng);
        o.vy += spec.accel_sigma * gauss(rng);
      }
      o.x += o.vx;
      o.y += o.vy;
      if (o.x < 0.0) {
        o.x = -o.x;
        o.vx = -o.vx;
      }
      if (o.x + o.w > spec.image_width) {
        o.x = 2.0 * (spec.image_width - o.w) - o.x;
        o.vx = -o.vx;
      }
      if (o.y < 0.0) {
        o.y = -o.y;
        o.vy = -o.vy;
      }
      if (o.y + o.h > spec.image_height) {
        o.y = 2.0 * (spec.image_height - o.h) - o.y;
        o.vy = -o.vy;
      }
    }
  }
  return seq;
}

}  // namespace streamctl
