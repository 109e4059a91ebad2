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
#include "streamctl/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace streamctl {

std::vector<double> EvalConfig::DefaultIouThresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

void EvalConfig::Validate() const {
  if (iou_thresholds.empty()) throw Error("schema", "at least one IoU threshold is required");
  for (size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw Error("schema", "IoU thresholds must lie in (0, 1]");
    if (i > 0 && !(t > iou_thresholds[i - 1])) throw Error("schema", "IoU thresholds must strictly increase");
  }
  if (!(small_max_area > 0.0 && medium_max_area > small_max_area)) {
    throw Error("schema", "size buckets must satisfy 0 < small < medium");
  }
}

Json EvalReport::ToJson() const {
  Json j;
  if (streaming) {
    j["sAP"] = ap;
    j["sAP50"] = ap50;
    j["sAP75"] = ap75;
    j["mAP"] = offline_map;
  } else {
    j["mAP"] = ap;
    j["AP50"] = ap50;
    j["AP75"] = ap75;
  }
  j["frames"] = frames;
  j["per_category"] = per_category;
  return j;
}

std::string EvalReport::ToCsv() const {
  std::ostringstream out;
  out << "metric,value\n";
  if (streaming) {
    out << "sAP," << FormatDouble(ap) << "\nsAP50," << FormatDouble(ap50) << "\nsAP75," << FormatDouble(ap75)
        << "\nmAP," << FormatDouble(offline_map) << "\n";
  } else {
    out << "mAP," << FormatDouble(ap) << "\nAP50," << FormatDouble(ap50) << "\nAP75," << FormatDouble(ap75) << "\n";
  }
  for (const auto& [cat, v] : per_category) out << "AP[" << cat << "]," << FormatDouble(v) << "\n";
  return out.str();
}

double Iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double AveragePrecision(std::span<const ApDetection> detections, std::span<const ApGroundTruth> gt,
                        double iou_threshold) {
  if (gt.empty()) return detections.empty() ? 1.0 : 0.0;

  std::vector<size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return detections[a].score > detections[b].score; });

  std::unordered_map<int, std::vector<size_t>> gt_by_image;
  for (size_t g = 0; g < gt.size(); ++g) gt_by_image[gt[g].image].push_back(g);

  std::vector<bool> matched(gt.size(), false);
  std::vector<double> precision, recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  int tp = 0, fp = 0;
  for (size_t d : order) {
    const ApDetection& det = detections[d];
    int best = -1;
    double best_iou = -1.0;
    const auto candidates = gt_by_image.find(det.image);
    if (candidates == gt_by_image.end()) {
      ++fp;
      recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
      precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      continue;
    }
    for (size_t g : candidates->second) {
      if (matched[g]) continue;
      const double v = Iou(det.box, gt[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      matched[best] = true;
      ++tp;
    } else {
      ++fp;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  // Precision envelope, then area under the step curve.
  for (size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

double FrameScore(const std::vector<GtBox>& gt, const std::vector<Detection>* detections) {
  if (detections == nullptr) return 0.0;
  if (gt.empty()) return detections->empty() ? 1.0 : 0.0;
  std::vector<size_t> order(detections->size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return (*detections)[a].score > (*detections)[b].score; });
  std::vector<bool> used(gt.size(), false);
  double sum = 0.0;
  for (size_t d : order) {
    const Detection& det = (*detections)[d];
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].category != det.category) continue;
      const double v = Iou(det.bbox, gt[g].bbox);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = true;
      sum += best_iou;
    }
  }
  return sum / static_cast<double>(gt.size());
}

namespace {

size_t ThresholdIndex(const EvalConfig& cfg, double t) {
  for (size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
    if (std::abs(cfg.iou_thresholds[i] - t) < 1e-9) return i;
  }
  return cfg.iou_thresholds.size();
}

}  // namespace

EvalReport EvaluatePairs(std::span<const EvalPair> pairs, const EvalConfig& cfg) {
  cfg.Validate();
  std::set<std::string> categories;
  for (const EvalPair& p : pairs) {
    for (const GtBox& b : *p.gt) categories.insert(b.category);
  }

  EvalReport report;
  report.frames = static_cast<int>(pairs.size());
  const size_t nt = cfg.iou_thresholds.size();
  const size_t i50 = ThresholdIndex(cfg, 0.5), i75 = ThresholdIndex(cfg, 0.75);
  std::vector<double> sum_by_thr(nt, 0.0);
  for (const std::string& cat : categories) {
    std::vector<ApDetection> dets;
    std::vector<ApGroundTruth> gts;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const int image = static_cast<int>(i);
      for (const GtBox& b : *pairs[i].gt) {
        if (b.category == cat) gts.push_back({image, b.bbox});
      }
      if (pairs[i].detections == nullptr) continue;
      for (const Detection& d : *pairs[i].detections) {
        if (d.category == cat) dets.push_back({image, d.bbox, d.score});
      }
    }
    double cat_sum = 0.0;
    for (size_t t = 0; t < nt; ++t) {
      const double ap = AveragePrecision(dets, gts, cfg.iou_thresholds[t]);
      sum_by_thr[t] += ap;
      cat_sum += ap;
    }
    report.per_category[cat] = cat_sum / static_cast<double>(nt);
  }
  if (!categories.empty()) {
    const double nc = static_cast<double>(categories.size());
    double total = 0.0;
    for (double s : sum_by_thr) total += s;
    report.ap = total / (nc * static_cast<double>(nt));
    if (i50 < nt) report.ap50 = sum_by_thr[i50] / nc;
    if (i75 < nt) report.ap75 = sum_by_thr[i75] / nc;
  }
  return report;
}

EvalReport EvaluateOffline(const std::map<int, std::vector<Detection>>& per_frame_detections, const Sequence& gt,
                           const EvalConfig& cfg) {
  std::vector<int> missing;
  std::vector<EvalPair> pairs;
  pairs.reserve(gt.frames.size());
  for (const GroundTruthFrame& f : gt.frames) {
    const auto it = per_frame_detections.find(f.frame_index);
    if (it == per_frame_detections.end()) {
      missing.push_back(f.frame_index);
      continue;
    }
    pairs.push_back({&f.boxes, &it->second});
  }
  if (!missing.empty()) {
    std::string list;
    for (size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? "," : "") + std::to_string(missing[i]);
    if (missing.size() > 20) list += ",...";
    throw Error("schema", "sequence " + gt.id + ": no detections entry for " + std::to_string(missing.size()) +
                              " ground-truth frame(s): " + list);
  }
  return EvaluatePairs(pairs, cfg);
}

namespace {

void AppendStreamingPairs(std::span<const PredictionRecord> stream, const Sequence& gt,
                          std::vector<EvalPair>& pairs) {
  for (const GroundTruthFrame& f : gt.frames) {
    const auto j = PairLatest(stream, QueryInstant(f.frame_index, gt.frame_period));
    pairs.push_back({&f.boxes, j ? &stream[*j].detections : nullptr});
  }
}

}  // namespace

EvalReport EvaluateStreaming(std::span<const PredictionRecord> stream, const Sequence& gt,
                             const EvalConfig& cfg) {
  std::vector<EvalPair> pairs;
  AppendStreamingPairs(stream, gt, pairs);
  EvalReport r = EvaluatePairs(pairs, cfg);
  r.streaming = true;
  return r;
}

std::map<int, std::vector<Detection>> OfflineView(std::span<const PredictionRecord> stream, int frame_count) {
  std::map<int, std::vector<Detection>> out;
  for (int i = 0; i < frame_count; ++i) out[i];
  for (const PredictionRecord& r : stream) {
    if (r.source_frame_index >= 0 && r.source_frame_index < frame_count) out[r.source_frame_index] = r.detections;
  }
  return out;
}

EvalReport EvaluateStream(std::span<const StreamAndTruth> runs, const EvalConfig& cfg) {
  std::vector<EvalPair> pairs;
  std::vector<EvalPair> offline_pairs;
  std::vector<std::map<int, std::vector<Detection>>> offline(runs.size());
  for (size_t i = 0; i < runs.size(); ++i) {
    AppendStreamingPairs(*runs[i].stream, *runs[i].gt, pairs);
    offline[i] = OfflineView(*runs[i].stream, runs[i].gt->size());
    for (const GroundTruthFrame& f : runs[i].gt->frames) {
      offline_pairs.push_back({&f.boxes, &offline[i].at(f.frame_index)});
    }
  }
  EvalReport r = EvaluatePairs(pairs, cfg);
  r.streaming = true;
  r.offline_map = EvaluatePairs(offline_pairs, cfg).ap;
  return r;
}

}  // namespace streamctl
