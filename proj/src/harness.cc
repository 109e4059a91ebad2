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
#include "streamctl/harness.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "streamctl/context.h"

namespace streamctl {

void EfficiencyInputs::Validate() const {
  if (m_prob.empty() || m_prob.size() != m_lat.size()) throw Error("schema", "M_prob and M_lat need the same rows");
  double total = 0.0;
  for (size_t r = 0; r < m_prob.size(); ++r) {
    if (m_prob[r].empty() || m_prob[r].size() != m_lat[r].size() || m_prob[r].size() != m_prob[0].size()) {
      throw Error("schema", "M_prob and M_lat must be rectangular with matching shapes");
    }
    for (size_t c = 0; c < m_prob[r].size(); ++c) {
      if (m_prob[r][c] < 0.0) throw Error("schema", "M_prob entries must be >= 0");
      if (!(m_lat[r][c] >= 0.0)) throw Error("schema", "M_lat entries must be >= 0");
      total += m_prob[r][c];
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("schema", "M_prob must sum to 1");
  if (!(beta >= 1.0)) throw Error("schema", "beta must be >= 1");
  if (dynamic_column >= m_lat[0].size()) throw Error("schema", "dynamic column outside M_lat");
  if (n_epochs < 0.0 || n_train < 0.0) throw Error("schema", "counts must be >= 0");
}

EfficiencyInputs EfficiencyInputs::FromJson(const Json& j) {
  EfficiencyInputs in;
  in.m_prob = j.at("M_prob").get<std::vector<std::vector<double>>>();
  in.m_lat = j.at("M_lat").get<std::vector<std::vector<double>>>();
  in.n_epochs = j.value("n_epochs", in.n_epochs);
  in.n_train = j.value("N_train", in.n_train);
  in.n_val = j.value("N_val", in.n_val);
  in.beta = j.value("beta", in.beta);
  in.dynamic_column = j.value("dynamic_column", in.dynamic_column);
  in.Validate();
  return in;
}

Json EfficiencyInputs::ToJson() const {
  return Json{{"M_prob", m_prob}, {"M_lat", m_lat}, {"n_epochs", n_epochs}, {"N_train", n_train},
              {"N_val", n_val},   {"beta", beta},   {"dynamic_column", dynamic_column}};
}

Json EfficiencyReport::ToJson() const {
  return Json{{"learned_time", learned_time}, {"static_time", static_time}, {"dynamic_time", dynamic_time},
              {"eta1", eta1},                 {"eta2", eta2}};
}

EfficiencyReport ComputeEfficiency(const EfficiencyInputs& in) {
  in.Validate();
  double dot = 0.0, sum = 0.0, column = 0.0;
  for (size_t r = 0; r < in.m_lat.size(); ++r) {
    for (size_t c = 0; c < in.m_lat[r].size(); ++c) {
      dot += in.m_prob[r][c] * in.m_lat[r][c];
      sum += in.m_lat[r][c];
    }
    column += in.m_lat[r][in.dynamic_column];
  }
  EfficiencyReport rep;
  rep.learned_time = dot / in.beta * in.n_epochs * in.n_train;
  rep.static_time = in.n_train * sum;
  rep.dynamic_time = in.n_train * column / in.beta;
  if (!(rep.learned_time > 0.0)) throw Error("numeric", "learned training time is zero");
  rep.eta1 = rep.static_time / rep.learned_time;
  rep.eta2 = rep.dynamic_time / rep.learned_time;
  return rep;
}

std::vector<std::vector<PredictionRecord>> RunStatic(const Corpus& corpus, const DecisionSpace& space,
                                                     const RuntimeProfile& profile, const DetectionSource& source,
                                                     const Action& action, const StaticRunOptions& opts) {
  std::vector<std::vector<PredictionRecord>> out;
  for (const Sequence& seq : corpus.sequences) {
    PerceptionSim sim(seq, space, profile, source, opts.sim);
    out.push_back(RunSchedule(sim, action, opts.schedule).records);
  }
  return out;
}

EvalReport EvaluateRuns(const Corpus& corpus, const std::vector<std::vector<PredictionRecord>>& streams,
                        const EvalConfig& cfg) {
  if (streams.size() != corpus.sequences.size()) throw Error("range", "one stream per sequence is required");
  std::vector<StreamAndTruth> runs;
  for (size_t i = 0; i < streams.size(); ++i) runs.push_back({&streams[i], &corpus.sequences[i]});
  return EvaluateStream(runs, cfg);
}

EvalReport OfflineAccuracy(const Corpus& corpus, const DecisionSpace& space, const RuntimeProfile& profile,
                           const DetectionSource& source, const Action& action, const EvalConfig& cfg) {
  std::vector<std::vector<Detection>> outputs;
  std::vector<EvalPair> pairs;
  for (const Sequence& seq : corpus.sequences) {
    PerceptionSim sim(seq, space, profile, source);
    for (const GroundTruthFrame& f : seq.frames) outputs.push_back(sim.Step(f.frame_index, action, 0).detections);
  }
  size_t k = 0;
  for (const Sequence& seq : corpus.sequences) {
    for (const GroundTruthFrame& f : seq.frames) pairs.push_back({&f.boxes, &outputs[k++]});
  }
  return EvaluatePairs(pairs, cfg);
}

std::vector<BenchmarkRow> BenchmarkStatic(const Corpus& corpus, const DecisionSpace& space,
                                          const RuntimeProfile& profile, const DetectionSource& source,
                                          const StaticRunOptions& opts, const EvalConfig& eval) {
  std::vector<BenchmarkRow> rows;
  for (size_t flat = 0; flat < space.flat_size(); ++flat) {
    BenchmarkRow row;
    row.action = Unflatten(flat, space);
    const auto streams = RunStatic(corpus, space, profile, source, row.action, opts);
    const EvalReport rep = EvaluateRuns(corpus, streams, eval);
    row.sap = rep.ap;
    row.map = OfflineAccuracy(corpus, space, profile, source, row.action, eval).ap;
    double lat = 0.0, mismatch = 0.0;
    int jobs = 0, frames = 0;
    for (size_t i = 0; i < streams.size(); ++i) {
      double start = 0.0;
      for (const PredictionRecord& r : streams[i]) {
        // Jobs run back to back apart from waits; latency is finish minus the
        // later of source arrival and the previous finish.
        const double arrival = r.source_frame_index * corpus.sequences[i].frame_period;
        lat += r.emit_timestamp - std::max(start, arrival);
        start = r.emit_timestamp;
        ++jobs;
      }
      const auto m = TemporalMismatch(streams[i], corpus.sequences[i].frames, corpus.sequences[i].frame_period);
      for (const auto& [f, v] : m) mismatch += v;
      frames += static_cast<int>(m.size());
    }
    row.mean_latency_s = jobs ? lat / jobs : 0.0;
    row.mean_mismatch = frames ? mismatch / frames : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string BenchmarkCsv(const std::vector<BenchmarkRow>& rows, const DecisionSpace& space) {
  std::ostringstream out;
  for (const auto& d : space.dimensions()) out << d.name << ',';
  out << "sAP,mAP,mean_latency_s,mean_mismatch\n";
  for (const BenchmarkRow& r : rows) {
    for (size_t i = 0; i < space.dimension_count(); ++i) {
      out << space.dimension(i).choices[r.action.index[i]].label << ',';
    }
    out << FormatDouble(r.sap) << ',' << FormatDouble(r.map) << ',' << FormatDouble(r.mean_latency_s) << ','
        << FormatDouble(r.mean_mismatch) << '\n';
  }
  return out.str();
}

const BenchmarkRow& BestBySap(const std::vector<BenchmarkRow>& rows) {
  if (rows.empty()) throw Error("range", "empty benchmark grid");
  size_t best = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sap > rows[best].sap) best = i;
  }
  return rows[best];
}

std::vector<PredictionRecord> RunAdaptiveScaleBaseline(const Sequence& seq, const DecisionSpace& space,
                                                       const RuntimeProfile& profile, const DetectionSource& source,
                                                       const Action& base, const StaticRunOptions& opts) {
  const auto d = space.Find(kDimScale);
  PerceptionSim sim(seq, space, profile, source, opts.sim);
  if (!d) return RunSchedule(sim, base, opts.schedule).records;
  const auto& dim = space.dimension(*d);
  const DecisionHook hook = [&](const HookState& s) {
    const double proxy = AdaptiveScaleProxy(seq, s.frame, source, space, base);
    // Nearest choice to the proxy on the normalized scale axis.
    Action a = base;
    double best = 2.0;
    for (size_t i = 0; i < dim.size(); ++i) {
      const double gap = std::abs(ChoicePosition(dim, i) - proxy);
      if (gap < best - 1e-12) {
        best = gap;
        a.index[*d] = static_cast<int>(i);
      }
    }
    HookResult r;
    r.action = a;
    return r;
  };
  return RunSchedule(sim, base, opts.schedule, hook).records;
}

std::vector<SweepRow> ContentionSweep(const Corpus& corpus, Controller& controller, const Environment& env,
                                      const TrainingConfig& cfg, const std::vector<Action>& statics,
                                      const std::vector<int>& levels, const EvalConfig& eval) {
  std::vector<SweepRow> rows;
  for (int level : levels) {
    TrainingConfig c = cfg;
    c.contention.kind = ContentionPlan::Kind::kSchedule;
    c.contention.schedule = ContentionSchedule::Constant(level);
    std::vector<std::vector<PredictionRecord>> streams;
    for (const SequenceRun& run : EvaluateController(corpus, controller, env, c)) {
      streams.push_back(run.schedule.records);
    }
    rows.push_back({"learned", level, EvaluateRuns(corpus, streams, eval).ap});
    StaticRunOptions opts;
    opts.schedule.policy = cfg.scheduler;
    opts.schedule.contention = c.contention.schedule;
    opts.schedule.forecast_output = cfg.forecast_output;
    opts.sim = cfg.sim;
    for (const Action& a : statics) {
      const auto s = RunStatic(corpus, env.space, env.profile, env.source, a, opts);
      rows.push_back({env.space.Format(a), level, EvaluateRuns(corpus, s, eval).ap});
    }
  }
  return rows;
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "policy,level,sAP\n";
  for (const SweepRow& r : rows) out << '"' << r.policy << "\"," << r.level << ',' << FormatDouble(r.sap) << '\n';
  return out.str();
}

std::string Heatmap::ToCsv() const {
  std::ostringstream out;
  out << row_dim << '\\' << col_dim;
  for (const std::string& c : col_labels) out << ',' << c;
  out << '\n';
  for (size_t r = 0; r < row_labels.size(); ++r) {
    out << row_labels[r];
    for (double v : freq[r]) out << ',' << FormatDouble(v);
    out << '\n';
  }
  return out.str();
}

Heatmap DecisionHeatmap(const std::vector<Action>& actions, const DecisionSpace& space, const std::string& row_dim,
                        const std::string& col_dim) {
  Heatmap h;
  const auto rd = space.Find(row_dim);
  if (!rd) throw Error("schema", "heatmap row dimension '" + row_dim + "' not in the space");
  const auto cd = space.Find(col_dim);
  h.row_dim = row_dim;
  h.col_dim = cd ? col_dim : "-";
  for (const Choice& c : space.dimension(*rd).choices) h.row_labels.push_back(c.label);
  if (cd) {
    for (const Choice& c : space.dimension(*cd).choices) h.col_labels.push_back(c.label);
  } else {
    h.col_labels = {"all"};
  }
  h.freq.assign(h.row_labels.size(), std::vector<double>(h.col_labels.size(), 0.0));
  if (actions.empty()) return h;
  for (const Action& a : actions) {
    space.Validate(a);
    h.freq[a.index[*rd]][cd ? a.index[*cd] : 0] += 1.0;
  }
  for (auto& row : h.freq) {
    for (double& v : row) v /= static_cast<double>(actions.size());
  }
  return h;
}

std::vector<Action> StreamActions(const PredictionStreams& streams) {
  std::vector<Action> out;
  for (const auto& [seq, records] : streams) {
    for (const PredictionRecord& r : records) {
      if (!r.config_used.index.empty()) out.push_back(r.config_used);
    }
  }
  return out;
}

std::string MismatchCsv(std::span<const PredictionRecord> stream, const Sequence& seq) {
  std::ostringstream out;
  out << "frame,mismatch\n";
  for (const auto& [f, m] : TemporalMismatch(stream, seq.frames, seq.frame_period)) out << f << ',' << m << '\n';
  return out.str();
}

}  // namespace streamctl
