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
#include "streamctl/context.h"

#include <algorithm>
#include <cmath>

namespace streamctl {

std::string SwitchabilityName(Switchability s) {
  switch (s) {
    case Switchability::kLow:
      return "low";
    case Switchability::kMedium:
      return "medium";
    case Switchability::kHigh:
      return "high";
  }
  return "low";
}

std::vector<std::string> ContextLayout::FieldNames() const {
  std::vector<std::string> names = {"conf_mean", "conf_std"};
  for (const std::string& c : categories) names.push_back("count[" + c + "]");
  for (const char* n : {"n_small", "n_medium", "n_large", "adaptive_scale", "switch_low", "switch_medium",
                        "switch_high", "contention"}) {
    names.push_back(n);
  }
  return names;
}

Json ContextLayout::ToJson() const {
  return Json{{"categories", categories}, {"max_contention", max_contention}, {"size", size()},
              {"fields", FieldNames()}};
}

ContextLayout ContextLayout::FromJson(const Json& j) {
  ContextLayout l;
  l.categories = j.at("categories").get<std::vector<std::string>>();
  l.max_contention = j.value("max_contention", 0);
  if (j.contains("size") && j["size"].get<size_t>() != l.size()) {
    throw Error("schema", "context layout size does not match its categories");
  }
  return l;
}

std::vector<double> SceneAggregates(const std::vector<Detection>& detections,
                                    const std::vector<std::string>& categories, double conf_floor,
                                    const EvalConfig& buckets) {
  std::vector<double> out(2 + categories.size() + 3, 0.0);
  std::vector<double> scores;
  for (const Detection& d : detections) {
    if (d.score < conf_floor) continue;
    scores.push_back(d.score);
    const auto it = std::find(categories.begin(), categories.end(), d.category);
    if (it != categories.end()) out[2 + (it - categories.begin())] += 1.0;
    const double a = d.bbox.area();
    const size_t bucket = a < buckets.small_max_area ? 0 : (a < buckets.medium_max_area ? 1 : 2);
    out[2 + categories.size() + bucket] += 1.0;
  }
  if (!scores.empty()) {
    out[0] = Mean(scores);
    out[1] = PopulationStd(scores);
  }
  return out;
}

double ChoicePosition(const DecisionDimension& dim, size_t idx) {
  double lo = 0.0, hi = 0.0;
  bool numeric = true;
  for (size_t i = 0; i < dim.size(); ++i) {
    if (!dim.choices[i].value) {
      numeric = false;
      break;
    }
    const double v = *dim.choices[i].value;
    if (i == 0 || v < lo) lo = v;
    if (i == 0 || v > hi) hi = v;
  }
  if (numeric && hi > lo) return (*dim.choices[idx].value - lo) / (hi - lo);
  return static_cast<double>(idx) / static_cast<double>(dim.size() - 1);
}

namespace {

// Scale indices ordered from the smallest value up.
std::vector<size_t> ScaleOrder(const DecisionDimension& dim) {
  std::vector<size_t> order(dim.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ChoicePosition(dim, a) < ChoicePosition(dim, b);
  });
  return order;
}

}  // namespace

double AdaptiveScaleProxy(const Sequence& seq, int frame, const DetectionSource& source,
                          const DecisionSpace& space, const Action& base) {
  const auto d = space.Find(kDimScale);
  const GroundTruthFrame& f = seq.frames.at(frame);
  if (!d || f.boxes.empty()) return 0.0;
  const auto& dim = space.dimension(*d);
  const auto order = ScaleOrder(dim);
  Action a = base;
  if (const auto* synth = dynamic_cast<const SyntheticSource*>(&source)) {
    std::vector<double> recall(dim.size());
    double best = 0.0;
    for (size_t i = 0; i < dim.size(); ++i) {
      a.index[*d] = static_cast<int>(i);
      recall[i] = synth->ExpectedRecall(f, a);
      best = std::max(best, recall[i]);
    }
    for (size_t i : order) {
      if (recall[i] >= 0.95 * best - 1e-12) return ChoicePosition(dim, i);
    }
    return 1.0;
  }
  size_t arg = order.front();
  double best_loss = 2.0;
  for (size_t i : order) {
    a.index[*d] = static_cast<int>(i);
    const auto dets = source.Detect(seq, frame, a);
    const double loss = 1.0 - FrameScore(f.boxes, &dets);
    if (loss < best_loss - 1e-12) {
      best_loss = loss;
      arg = i;
    }
  }
  return ChoicePosition(dim, arg);
}

double SwitchabilitySpread(const Sequence& seq, int frame, const DetectionSource& source,
                           const DecisionSpace& space, const Action& base) {
  const auto d = space.Find(kDimModel);
  if (!d || space.dimension(*d).size() < 2) return 0.0;
  const GroundTruthFrame& f = seq.frames.at(frame);
  Action a = base;
  std::vector<double> scores;
  for (size_t i = 0; i < space.dimension(*d).size(); ++i) {
    a.index[*d] = static_cast<int>(i);
    const auto dets = source.Detect(seq, frame, a);
    scores.push_back(FrameScore(f.boxes, &dets));
  }
  return PopulationStd(scores);
}

Switchability SwitchabilityThresholds::Label(double spread) const {
  if (spread <= low_cut) return Switchability::kLow;
  if (spread <= high_cut) return Switchability::kMedium;
  return Switchability::kHigh;
}

SwitchabilityThresholds SwitchabilityThresholds::Calibrate(std::vector<double> spreads) {
  SwitchabilityThresholds t;
  if (spreads.empty()) return t;
  std::sort(spreads.begin(), spreads.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(spreads.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, spreads.size() - 1);
    return spreads[lo] + (pos - lo) * (spreads[hi] - spreads[lo]);
  };
  t.low_cut = quantile(1.0 / 3.0);
  t.high_cut = quantile(2.0 / 3.0);
  return t;
}

Json SwitchabilityThresholds::ToJson() const { return Json{{"low_cut", low_cut}, {"high_cut", high_cut}}; }

SwitchabilityThresholds SwitchabilityThresholds::FromJson(const Json& j) {
  SwitchabilityThresholds t;
  t.low_cut = j.at("low_cut").get<double>();
  t.high_cut = j.at("high_cut").get<double>();
  if (t.high_cut < t.low_cut) throw Error("schema", "switchability cuts must satisfy low <= high");
  return t;
}

std::vector<double> CollectSwitchabilitySpreads(const Corpus& corpus, const DetectionSource& source,
                                                const DecisionSpace& space, int stride) {
  std::vector<double> out;
  const Action base = space.MidAction();
  for (const Sequence& s : corpus.sequences) {
    for (int f = 0; f < s.size(); f += std::max(1, stride)) out.push_back(SwitchabilitySpread(s, f, source, space, base));
  }
  return out;
}

ContextBuilder::ContextBuilder(ContextLayout layout, const DecisionSpace& space, const DetectionSource& source,
                               SwitchabilityThresholds thresholds, ContextOptions options)
    : layout_(std::move(layout)),
      space_(space),
      source_(source),
      thresholds_(thresholds),
      options_(options),
      reference_(space.MidAction()) {}

std::vector<double> ContextBuilder::Build(const Sequence& seq, int frame, const std::vector<Detection>* latest,
                                          int sensed_level) const {
  static const std::vector<Detection> kNone;
  std::vector<double> z = SceneAggregates(latest ? *latest : kNone, layout_.categories, options_.conf_floor);
  z.push_back(AdaptiveScaleProxy(seq, frame, source_, space_, reference_));
  const Switchability label = thresholds_.Label(SwitchabilitySpread(seq, frame, source_, space_, reference_));
  for (int i = 0; i < 3; ++i) z.push_back(static_cast<int>(label) == i ? 1.0 : 0.0);
  z.push_back(layout_.max_contention > 0 ? static_cast<double>(sensed_level) / layout_.max_contention : 0.0);
  if (z.size() != layout_.size()) {
    throw Error("schema", "context length " + std::to_string(z.size()) + " != layout size " +
                              std::to_string(layout_.size()));
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw Error("numeric", "non-finite context entry");
  }
  return z;
}

}  // namespace streamctl
