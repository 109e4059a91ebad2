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

#include "oracles.h"
#include "streamctl/config_space.h"

namespace streamctl {
namespace {

using testing::SpaceWithSizes;

TEST(FlatIndex, BijectionOverFourDimensionalSpace) {
  const DecisionSpace space = SpaceWithSizes({5, 4, 5, 5});
  EXPECT_EQ(space.flat_size(), 500u);
  EXPECT_EQ(FlatIndex(Action{{0, 0, 0, 0}}, space), 0u);
  EXPECT_EQ(FlatIndex(Action{{4, 3, 4, 4}}, space), 499u);
  for (size_t i = 0; i < space.flat_size(); ++i) EXPECT_EQ(FlatIndex(Unflatten(i, space), space), i);
  EXPECT_THROW(Unflatten(500, space), Error);
  EXPECT_THROW(FlatIndex(Action{{5, 0, 0, 0}}, space), Error);
}

TEST(BranchOutputCount, SumNotProduct) {
  EXPECT_EQ(BranchOutputCount(SpaceWithSizes({5, 4})), 9u);
  EXPECT_EQ(BranchOutputCount(SpaceWithSizes({5, 4, 5, 5})), 19u);
  EXPECT_EQ(BranchOutputCount(SpaceWithSizes({5, 3})), 8u);
  EXPECT_EQ(SpaceWithSizes({5, 3}).flat_size(), 15u);
  // Equal only with a single dimension.
  EXPECT_EQ(BranchOutputCount(SpaceWithSizes({7})), SpaceWithSizes({7}).flat_size());
}

TEST(DecisionSpace, RejectsBadDimensions) {
  EXPECT_THROW(SpaceWithSizes({1}), Error);
  const Json dup = Json::parse(R"({"dimensions": [{"name": "scale", "choices": [1, 1]}]})");
  EXPECT_THROW(DecisionSpace::FromJson(dup), Error);
  const Json names = Json::parse(
      R"({"dimensions": [{"name": "a", "choices": [1, 2]}, {"name": "a", "choices": [1, 2]}]})");
  EXPECT_THROW(DecisionSpace::FromJson(names), Error);
}

TEST(DecisionSpace, ParseFormatAndJson) {
  const DecisionSpace space = DecisionSpace::FromJson(Json::parse(R"({"dimensions": [
      {"name": "scale", "choices": [480, 600, 720]},
      {"name": "model", "choices": ["frcnn", "yolo"]}]})"));
  const Action a = space.Parse("scale=600,model=yolo");
  EXPECT_EQ(a.index, (std::vector<int>{1, 1}));
  EXPECT_EQ(space.Parse(space.Format(a)), a);
  EXPECT_EQ(space.ActionFromJson(space.ActionToJson(a)), a);
  EXPECT_EQ(DecisionSpace::FromJson(space.ToJson()).ToJson(), space.ToJson());
  EXPECT_THROW(space.Parse("scale=601,model=yolo"), Error);
  EXPECT_THROW(space.Parse("scale=600"), Error);
  EXPECT_EQ(space.MidAction().index, (std::vector<int>{1, 1}));
}

RuntimeProfile TinyProfile(const DecisionSpace& space) {
  RuntimeProfile p("dev", space);
  p.Set(Action{{0}}, 0, {0.055, {}});
  p.Set(Action{{1}}, 0, {0.080, {}});
  return p;
}

TEST(RuntimeProfile, Lookup) {
  const DecisionSpace space = SpaceWithSizes({2});
  RuntimeProfile p = TinyProfile(space);
  EXPECT_EQ(p.Finalize(), 0);
  EXPECT_EQ(LookupLatency(p, Action{{0}}, 0), 0.055);
  EXPECT_DOUBLE_EQ(LookupTrackerLatency(p, Action{{0}}, 0), 0.055 * 0.25);
  try {
    LookupLatency(p, Action{{1}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "range");
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
  }
}

TEST(RuntimeProfile, InterpolatesMissingLevels) {
  const DecisionSpace space = SpaceWithSizes({2});
  RuntimeProfile p = TinyProfile(space);
  p.Set(Action{{0}}, 2, {0.075, {}});
  p.Set(Action{{1}}, 2, {0.100, {}});
  EXPECT_EQ(p.Finalize(), 2);
  EXPECT_DOUBLE_EQ(LookupLatency(p, Action{{0}}, 1), 0.065);
}

TEST(RuntimeProfile, RejectsNonMonotoneAndNonPositive) {
  const DecisionSpace space = SpaceWithSizes({2});
  RuntimeProfile p = TinyProfile(space);
  p.Set(Action{{0}}, 1, {0.050, {}});
  p.Set(Action{{1}}, 1, {0.090, {}});
  EXPECT_THROW(p.Finalize(), Error);
  RuntimeProfile q("dev", space);
  q.Set(Action{{0}}, 0, {0.0, {}});
  q.Set(Action{{1}}, 0, {0.1, {}});
  EXPECT_THROW(q.Finalize(), Error);
  RuntimeProfile missing("dev", space);
  missing.Set(Action{{0}}, 0, {0.1, {}});
  EXPECT_THROW(missing.Finalize(), Error);
}

TEST(RuntimeProfile, CurveIsMonotoneAndRoundTrips) {
  const DecisionSpace space = SpaceWithSizes({3, 2});
  const RuntimeProfile p = RuntimeProfile::FromCurve(
      "curve", space, [](const Action& a) { return 0.02 + 0.01 * a.index[0] + 0.005 * a.index[1]; }, 0.8, 1.5, 4);
  for (size_t f = 0; f < space.flat_size(); ++f) {
    const Action a = Unflatten(f, space);
    for (int c = 0; c < 4; ++c) EXPECT_LE(LookupLatency(p, a, c), LookupLatency(p, a, c + 1));
    EXPECT_DOUBLE_EQ(LookupLatency(p, a, 2), LookupLatency(p, a, 0) * (1.0 + 0.8 * std::pow(2.0, 1.5)));
  }
  const RuntimeProfile back = RuntimeProfile::FromJson(p.ToJson(), space);
  EXPECT_EQ(back.ToJson(), p.ToJson());
}

}  // namespace
}  // namespace streamctl
