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
#ifndef STREAMCTL_HARNESS_H_
#define STREAMCTL_HARNESS_H_

#include <string>
#include <vector>

#include "streamctl/eval.h"
#include "streamctl/training.h"

namespace streamctl {

struct EfficiencyInputs {
  // Rows are scale choices, columns proposal choices.
  std::vector<std::vector<double>> m_prob;
  std::vector<std::vector<double>> m_lat;  // seconds
  double n_epochs = 1.0;
  double n_train = 1.0;
  double n_val = 0.0;  // accepted, not used by the formulas
  double beta = 1.0;
  // Column of m_lat the dynamic baseline runs at while it sweeps scales.
  size_t dynamic_column = 0;

  void Validate() const;
  static EfficiencyInputs FromJson(const Json& j);
  Json ToJson() const;
};

struct EfficiencyReport {
  double learned_time = 0.0;
  double static_time = 0.0;
  double dynamic_time = 0.0;
  double eta1 = 0.0;  // static / learned
  double eta2 = 0.0;  // dynamic / learned

  Json ToJson() const;
};

EfficiencyReport ComputeEfficiency(const EfficiencyInputs& in);

struct BenchmarkRow {
  Action action;
  double sap = 0.0;
  double map = 0.0;  // offline, every frame processed
  double mean_latency_s = 0.0;
  double mean_mismatch = 0.0;
};

struct StaticRunOptions {
  ScheduleOptions schedule;
  SimOptions sim;
};

// Runs one fixed action over the corpus.
std::vector<std::vector<PredictionRecord>> RunStatic(const Corpus& corpus, const DecisionSpace& space,
                                                     const RuntimeProfile& profile, const DetectionSource& source,
                                                     const Action& action, const StaticRunOptions& opts);

// Pooled streaming evaluation of one stream per corpus sequence.
EvalReport EvaluateRuns(const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams,
                        const EvalConfig& cfg = {});

// Offline mAP of a fixed action with latency ignored: the pipeline runs on
// every frame in order (tracker stride included) and each frame is scored
// against its own output.
EvalReport OfflineAccuracy(const Corpus& corpus, const DecisionSpace& space, const RuntimeProfile& profile,
                           const DetectionSource& source, const Action& action, const EvalConfig& cfg = {});

// One row per action of the space, in flat-index order.
std::vector<BenchmarkRow> BenchmarkStatic(const Corpus& corpus, const DecisionSpace& space,
                                          const RuntimeProfile& profile, const DetectionSource& source,
                                          const StaticRunOptions& opts, const EvalConfig& eval = {});
std::string BenchmarkCsv(const std::vector<BenchmarkRow>& rows, const DecisionSpace& space);
// Row with the highest sAP (first on ties).
const BenchmarkRow& BestBySap(const std::vector<BenchmarkRow>& rows);

// Per-frame greedy scale baseline: before every job the scale is set to the
// one indicated by the adaptive-scale proxy; other dimensions stay at `base`.
std::vector<PredictionRecord> RunAdaptiveScaleBaseline(const Sequence& seq, const DecisionSpace& space,
                                                       const RuntimeProfile& profile, const DetectionSource& source,
                                                       const Action& base, const StaticRunOptions& opts);

struct SweepRow {
  std::string policy;  // "learned" or the formatted static action
  int level = 0;
  double sap = 0.0;
};

// sAP per constant contention level for the controller (greedy) and for each
// static action.
std::vector<SweepRow> ContentionSweep(const Corpus& corpus, Controller& controller, const Environment& env,
                                      const TrainingConfig& cfg, const std::vector<Action>& statics,
                                      const std::vector<int>& levels, const EvalConfig& eval = {});
std::string SweepCsv(const std::vector<SweepRow>& rows);

// Frequencies of chosen (row_dim, col_dim) choices over a set of actions.
struct Heatmap {
  std::string row_dim, col_dim;
  std::vector<std::string> row_labels, col_labels;
  std::vector<std::vector<double>> freq;

  std::string ToCsv() const;
};
Heatmap DecisionHeatmap(const std::vector<Action>& actions, const DecisionSpace& space,
                        const std::string& row_dim = kDimScale, const std::string& col_dim = kDimProposals);
// Actions from the stream's record configs.
std::vector<Action> StreamActions(const PredictionStreams& streams);

// frame,mismatch rows.
std::string MismatchCsv(std::span<const PredictionRecord> stream, const Sequence& seq);

}  // namespace streamctl

#endif  // STREAMCTL_HARNESS_H_
