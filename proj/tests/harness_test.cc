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
#include <gtest/gtest.h>

#include <numeric>

#include "oracles.h"
#include "scenarios.h"
#include "streamctl/harness.h"

namespace streamctl {
namespace {

EfficiencyInputs Uniform(size_t rows, size_t cols, double latency) {
  EfficiencyInputs in;
  in.m_prob.assign(rows, std::vector<double>(cols, 1.0 / (rows * cols)));
  in.m_lat.assign(rows, std::vector<double>(cols, latency));
  return in;
}

TEST(Efficiency, UniformGridGivesCellCount) {
  for (auto [r, c] : std::vector<std::pair<size_t, size_t>>{{2, 2}, {4, 4}, {5, 4}}) {
    const EfficiencyReport rep = ComputeEfficiency(Uniform(r, c, 0.03));
    EXPECT_NEAR(rep.eta1, static_cast<double>(r * c), 1e-12 * r * c);
  }
}

TEST(Efficiency, BetaScaling) {
  EfficiencyInputs in = Uniform(3, 4, 0.02);
  in.m_lat[1][2] = 0.09;
  in.m_prob[0][0] += 0.05;
  in.m_prob[2][3] -= 0.05;
  in.n_epochs = 3;
  in.n_train = 40;
  const EfficiencyReport one = ComputeEfficiency(in);
  in.beta = 2.0;
  const EfficiencyReport two = ComputeEfficiency(in);
  EXPECT_DOUBLE_EQ(two.learned_time, one.learned_time / 2);
  EXPECT_DOUBLE_EQ(two.dynamic_time, one.dynamic_time / 2);
  EXPECT_DOUBLE_EQ(two.static_time, one.static_time);
  EXPECT_NEAR(two.eta2, one.eta2, 1e-12 * one.eta2);
  EXPECT_NEAR(two.eta1, 2 * one.eta1, 1e-12 * one.eta1);
}

TEST(Efficiency, TimeUnitInvariance) {
  EfficiencyInputs in = Uniform(2, 3, 0.04);
  in.m_lat[0][1] = 0.11;
  const EfficiencyReport base = ComputeEfficiency(in);
  for (double k : {1e-3, 1e3}) {
    EfficiencyInputs scaled = in;
    for (auto& row : scaled.m_lat) {
      for (double& v : row) v *= k;
    }
    const EfficiencyReport rep = ComputeEfficiency(scaled);
    EXPECT_NEAR(rep.eta1, base.eta1, 1e-12 * base.eta1);
    EXPECT_NEAR(rep.eta2, base.eta2, 1e-12 * base.eta2);
  }
}

TEST(Efficiency, Validation) {
  EfficiencyInputs in = Uniform(2, 2, 0.03);
  in.m_prob[0][0] = 0.9;
  EXPECT_THROW(ComputeEfficiency(in), Error);
  EfficiencyInputs ragged = Uniform(2, 2, 0.03);
  ragged.m_lat[1].pop_back();
  EXPECT_THROW(ComputeEfficiency(ragged), Error);
  const EfficiencyInputs ok = Uniform(2, 2, 0.03);
  EXPECT_EQ(EfficiencyInputs::FromJson(ok.ToJson()).ToJson(), ok.ToJson());
}

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override { SetWarningsEnabled(false); }
  void TearDown() override { SetWarningsEnabled(true); }
};

TEST_F(HarnessTest, BenchmarkHasOneRowPerConfiguration) {
  auto w = testing::PlantedContextWorld(1, 0, 2);
  const auto rows = BenchmarkStatic(w->train, w->space, w->profile, *w->source, {});
  ASSERT_EQ(rows.size(), w->space.flat_size());
  for (size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(FlatIndex(rows[i].action, w->space), i);
  const std::string csv = BenchmarkCsv(rows, w->space);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(rows.size() + 1));
}

TEST_F(HarnessTest, PlantedOptimumPerRegime) {
  auto w = testing::PlantedContextWorld(4, 0, 2);
  const auto signs = BenchmarkStatic(w->Regime(w->train, 0), w->space, w->profile, *w->source, {});
  const auto cars = BenchmarkStatic(w->Regime(w->train, 1), w->space, w->profile, *w->source, {});
  EXPECT_EQ(BestBySap(signs).action, (Action{{1, 1}}));
  EXPECT_EQ(BestBySap(cars).action, (Action{{0, 0}}));
}

// Small moving objects: the high scale finds more of them offline but is too
// slow to keep up with their motion.
std::unique_ptr<testing::World> LatencySkewedWorld() {
  const DecisionSpace space = testing::TwoByTwoSpace();
  DegradationModel model;
  model.default_profile = {0.02, 1.0, 1.0, 0.1, 0.0};
  SceneSpec scene;
  scene.min_objects = scene.max_objects = 4;
  scene.min_side_px = scene.max_side_px = 30.0;
  scene.speed_px_per_frame = 6.0;
  const RuntimeProfile profile = RuntimeProfile::FromCurve(
      "skewed", space, [](const Action& a) { return (0.8 + 3.5 * a.index[0] + 0.3 * a.index[1]) / 30.0; }, 0.0, 1.0,
      0);
  return testing::BuildWorld(space, model, profile, {{"movers", scene}}, 4, 0, 2);
}

TEST_F(HarnessTest, OfflineBestIsNotStreamingBest) {
  auto w = LatencySkewedWorld();
  const auto rows = BenchmarkStatic(w->train, w->space, w->profile, *w->source, {});
  const auto by_map = std::max_element(rows.begin(), rows.end(),
                                       [](const BenchmarkRow& a, const BenchmarkRow& b) { return a.map < b.map; });
  EXPECT_NE(by_map->action, BestBySap(rows).action);
  EXPECT_GT(by_map->map, BestBySap(rows).map);
  EXPECT_LT(by_map->sap, BestBySap(rows).sap);
}

TEST_F(HarnessTest, ContentionSweep) {
  auto w = testing::ContentionWorld(2, 2, 3);
  Controller c(w->space, w->layout.size(), testing::SmallControllerConfig(1));
  TrainingConfig cfg;
  std::vector<Action> statics;
  for (size_t f = 0; f < w->space.flat_size(); ++f) statics.push_back(Unflatten(f, w->space));
  const auto rows = ContentionSweep(w->test, c, w->env(), cfg, statics, {0, 1, 2, 3});
  ASSERT_EQ(rows.size(), 4 * (1 + statics.size()));

  // Level 0 matches an evaluation without any contention.
  std::vector<std::vector<PredictionRecord>> streams;
  for (const SequenceRun& run : EvaluateController(w->test, c, w->env(), cfg)) streams.push_back(run.schedule.records);
  EXPECT_EQ(rows[0].sap, EvaluateRuns(w->test, streams).ap);
  EXPECT_EQ(rows[1].sap, EvaluateRuns(w->test, RunStatic(w->test, w->space, w->profile, *w->source, statics[0], {})).ap);

  const size_t per_level = 1 + statics.size();
  for (size_t k = 1; k < per_level; ++k) {
    for (int level = 1; level <= 3; ++level) {
      EXPECT_LE(rows[level * per_level + k].sap, rows[(level - 1) * per_level + k].sap + 1e-12)
          << rows[k].policy << " level " << level;
    }
  }
}

TEST_F(HarnessTest, HeatmapOfStaticRunIsOneCell) {
  auto w = testing::PlantedContextWorld(1, 0, 2);
  PredictionStreams streams;
  for (const auto& s : RunStatic(w->train, w->space, w->profile, *w->source, Action{{1, 0}}, {})) {
    streams.emplace_back("s", s);
  }
  const Heatmap h = DecisionHeatmap(StreamActions(streams), w->space);
  ASSERT_EQ(h.freq.size(), 2u);
  EXPECT_EQ(h.freq[1][0], 1.0);
  EXPECT_EQ(h.freq[0][0] + h.freq[0][1] + h.freq[1][1], 0.0);
  EXPECT_EQ(h.row_labels, (std::vector<std::string>{"360", "720"}));
}

TEST_F(HarnessTest, HeatmapSumsToOne) {
  const DecisionSpace space = testing::SpaceWithSizes({3, 4, 2});
  std::vector<Action> actions;
  for (size_t f = 0; f < 97; ++f) actions.push_back(Unflatten((f * 7) % space.flat_size(), space));
  const Heatmap h = DecisionHeatmap(actions, space, "d0", "d2");
  double total = 0.0;
  for (const auto& row : h.freq) total += std::accumulate(row.begin(), row.end(), 0.0);
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(h.freq.size(), 3u);
  EXPECT_EQ(h.freq[0].size(), 2u);
  EXPECT_THROW(DecisionHeatmap(actions, space, "missing", "d0"), Error);
  // Without a column dimension the map collapses to one column.
  const Heatmap rows_only = DecisionHeatmap(actions, space, "d1", "missing");
  EXPECT_EQ(rows_only.col_labels, (std::vector<std::string>{"all"}));
  EXPECT_EQ(rows_only.freq.size(), 4u);
}

// Chosen scale shifts up on a faster device: the sAP-best configuration per
// sequence, compared across two profiles of the same corpus.
TEST_F(HarnessTest, FasterDeviceShiftsChosenScaleUp) {
  auto w = testing::PlantedContextWorld(4, 0, 2);
  auto modal_scale = [&](double speed) {
    const RuntimeProfile profile = RuntimeProfile::FromCurve(
        "dev", w->space, [&](const Action& a) { return (0.85 + 1.05 * a.index[0] + 0.4 * a.index[1]) / 30.0 / speed; },
        0.0, 1.0, 0);
    std::vector<Action> chosen;
    for (const Sequence& s : w->train.sequences) {
      Corpus one;
      one.sequences = {s};
      one.categories = w->train.categories;
      chosen.push_back(BestBySap(BenchmarkStatic(one, w->space, profile, *w->source, {})).action);
    }
    const Heatmap h = DecisionHeatmap(chosen, w->space);
    double high = h.freq[1][0] + h.freq[1][1];
    return high;
  };
  EXPECT_GT(modal_scale(4.0), modal_scale(1.0));
}

TEST_F(HarnessTest, MismatchCsvRows) {
  auto w = testing::PlantedContextWorld(1, 0, 2);
  const Sequence& s = w->train.sequences[0];
  PerceptionSim sim(s, w->space, w->profile, *w->source);
  const auto stream = RunSchedule(sim, Action{{1, 1}}, {}).records;
  const std::string csv = MismatchCsv(stream, s);
  EXPECT_EQ(csv.rfind("frame,mismatch\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(s.size() + 1));
}

TEST_F(HarnessTest, AdaptiveScaleBaselineRuns) {
  auto w = testing::PlantedContextWorld(1, 0, 2);
  const Sequence& s = w->train.sequences[0];
  const auto stream = RunAdaptiveScaleBaseline(s, w->space, w->profile, *w->source, Action{{0, 1}}, {});
  ASSERT_FALSE(stream.empty());
  for (const PredictionRecord& r : stream) EXPECT_EQ(r.config_used.index[1], 1);
}

}  // namespace
}  // namespace streamctl
