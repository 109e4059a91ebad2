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
#ifndef STREAMCTL_TESTS_SCENARIOS_H_
#define STREAMCTL_TESTS_SCENARIOS_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "streamctl/context.h"
#include "streamctl/harness.h"
#include "streamctl/perception.h"
#include "streamctl/training.h"

namespace streamctl::testing {

// Synthetic corpora with a planted structure, shared by unit and acceptance
// tests. Worlds are heap-allocated because the context builder keeps
// references into them.
struct World {
  DecisionSpace space;
  DegradationModel model;
  RuntimeProfile profile;
  std::unique_ptr<SyntheticSource> source;
  Corpus train, test;
  std::map<std::string, int> regime;  // sequence id -> regime index
  ContextLayout layout;
  SwitchabilityThresholds thresholds;
  std::unique_ptr<ContextBuilder> context;

  Environment env() const { return {space, profile, *source, *context}; }
  // Sequences of `corpus` that belong to regime r.
  Corpus Regime(const Corpus& corpus, int r) const;
};

struct RegimeSpec {
  std::string prefix;
  SceneSpec scene;
};

// Builds train/test corpora with `train_n` / `test_n` sequences per regime and
// finishes the context layout and thresholds on the training split.
std::unique_ptr<World> BuildWorld(DecisionSpace space, DegradationModel model, RuntimeProfile profile,
                                  const std::vector<RegimeSpec>& regimes, int train_n, int test_n, uint64_t seed);

DecisionSpace TwoByTwoSpace();  // scale {360, 720} x proposals {2, 8}

// Regime 0: many small static signs (high scale, many proposals win).
// Regime 1: two large fast cars (the cheapest configuration wins).
std::unique_ptr<World> PlantedContextWorld(int train_n, int test_n, uint64_t seed);

// Regime 0: small static signs, high scale best at every level.
// Regime 1: medium slow cars, high scale best idle and low scale best under
// contention. Latency grows as base * (1 + alpha * level^gamma), levels 0..3.
std::unique_ptr<World> ContentionWorld(int train_n, int test_n, uint64_t seed);

// Regime 0 is easy at every configuration, regime 1 hard at every one.
std::unique_ptr<World> EasyHardWorld(int n_per_regime, uint64_t seed);

ControllerConfig SmallControllerConfig(uint64_t seed);

}  // namespace streamctl::testing

#endif  // STREAMCTL_TESTS_SCENARIOS_H_
