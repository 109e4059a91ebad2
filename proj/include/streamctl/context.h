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
#ifndef STREAMCTL_CONTEXT_H_
#define STREAMCTL_CONTEXT_H_

#include <string>
#include <vector>

#include "streamctl/config_space.h"
#include "streamctl/eval.h"
#include "streamctl/perception.h"
#include "streamctl/stream.h"

namespace streamctl {

enum class Switchability { kLow = 0, kMedium = 1, kHigh = 2 };
std::string SwitchabilityName(Switchability s);

// z = [conf_mean, conf_std] + C category counts + [n_small, n_medium, n_large]
//     + [adaptive_scale] + switchability one-hot (3) + [contention / max].
struct ContextLayout {
  std::vector<std::string> categories;
  int max_contention = 0;

  size_t size() const { return 2 + categories.size() + 3 + 1 + 3 + 1; }
  std::vector<std::string> FieldNames() const;
  Json ToJson() const;
  static ContextLayout FromJson(const Json& j);
};

// Confidence mean / population std, per-category counts and COCO size-bucket
// counts over detections with score >= conf_floor. Length 2 + C + 3.
std::vector<double> SceneAggregates(const std::vector<Detection>& detections,
                                    const std::vector<std::string>& categories, double conf_floor = 0.0,
                                    const EvalConfig& buckets = {});

// Position of a choice on [0,1]: min-max of numeric values, otherwise by
// index.
double ChoicePosition(const DecisionDimension& dim, size_t idx);

// Normalized optimal-scale signal in [0,1] for the frame; 0 for an empty frame
// or a space without a scale dimension. Synthetic sources use the smallest
// scale whose expected recall reaches 95% of the best; traces use the scale
// with the lowest 1 - FrameScore loss. Other dimensions are held at `base`.
double AdaptiveScaleProxy(const Sequence& seq, int frame, const DetectionSource& source,
                          const DecisionSpace& space, const Action& base);

// Population std across model choices of the per-model FrameScore on this
// frame; 0 when the space has fewer than two models.
double SwitchabilitySpread(const Sequence& seq, int frame, const DetectionSource& source,
                           const DecisionSpace& space, const Action& base);

struct SwitchabilityThresholds {
  double low_cut = 0.0;
  double high_cut = 0.0;

  Switchability Label(double spread) const;
  // Empirical terciles of the given spreads.
  static SwitchabilityThresholds Calibrate(std::vector<double> spreads);
  Json ToJson() const;
  static SwitchabilityThresholds FromJson(const Json& j);
};

// Spreads over every `stride`-th frame of each sequence.
std::vector<double> CollectSwitchabilitySpreads(const Corpus& corpus, const DetectionSource& source,
                                                const DecisionSpace& space, int stride = 30);

struct ContextOptions {
  double conf_floor = 0.0;
};

class ContextBuilder {
 public:
  ContextBuilder(ContextLayout layout, const DecisionSpace& space, const DetectionSource& source,
                 SwitchabilityThresholds thresholds, ContextOptions options = {});

  // Context at a decision point: scene aggregates of the latest emitted
  // detections (none yet means empty), oracle signals on the newest frame and
  // the sensed contention level. Throws if the length drifts from the layout.
  std::vector<double> Build(const Sequence& seq, int frame, const std::vector<Detection>* latest,
                            int sensed_level) const;

  const ContextLayout& layout() const { return layout_; }
  const SwitchabilityThresholds& thresholds() const { return thresholds_; }

 private:
  ContextLayout layout_;
  const DecisionSpace& space_;
  const DetectionSource& source_;
  SwitchabilityThresholds thresholds_;
  ContextOptions options_;
  Action reference_;
};

}  // namespace streamctl

#endif  // STREAMCTL_CONTEXT_H_
