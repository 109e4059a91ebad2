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
#ifndef STREAMCTL_CONFIG_SPACE_H_
#define STREAMCTL_CONFIG_SPACE_H_

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamctl/util.h"

namespace streamctl {

// Well-known dimension names. Any other name is accepted and treated as a
// quality-affecting detector parameter.
inline constexpr const char* kDimScale = "scale";
inline constexpr const char* kDimProposals = "proposals";
inline constexpr const char* kDimModel = "model";
inline constexpr const char* kDimPrecision = "precision";
inline constexpr const char* kDimTrackerScale = "tracker_scale";
inline constexpr const char* kDimTrackerStride = "tracker_stride";

struct Choice {
  std::string label;
  std::optional<double> value;  // set when the choice is numeric

  Json ToJson() const;
  static Choice FromJson(const Json& j);
};

struct DecisionDimension {
  std::string name;
  std::vector<Choice> choices;

  size_t size() const { return choices.size(); }
  std::optional<size_t> Find(const Json& choice) const;
};

// One chosen index per dimension.
struct Action {
  std::vector<int> index;

  auto operator<=>(const Action&) const = default;
  bool operator==(const Action&) const = default;
};

class DecisionSpace {
 public:
  DecisionSpace() = default;
  // Throws if a dimension has fewer than two choices, duplicate choices, or
  // duplicate names.
  explicit DecisionSpace(std::vector<DecisionDimension> dims);

  const std::vector<DecisionDimension>& dimensions() const { return dims_; }
  const DecisionDimension& dimension(size_t i) const { return dims_.at(i); }
  size_t dimension_count() const { return dims_.size(); }
  std::optional<size_t> Find(const std::string& name) const;

  // Product of dimension sizes.
  size_t flat_size() const;
  // Per-dimension sizes in order.
  std::vector<size_t> sizes() const;

  // Throws Error("range") if `a` is not a member of the space.
  void Validate(const Action& a) const;

  // Parses "scale=480,proposals=300" (labels) into an action.
  Action Parse(const std::string& text) const;
  std::string Format(const Action& a) const;
  // {dim: choice} object form used by profile and trace files.
  Json ActionToJson(const Action& a) const;
  Action ActionFromJson(const Json& obj) const;

  // Index of the middle choice in every dimension.
  Action MidAction() const;

  Json ToJson() const;
  static DecisionSpace FromJson(const Json& j);

 private:
  std::vector<DecisionDimension> dims_;
};

// Mixed-radix bijection between actions and [0, flat_size()); the last
// dimension varies fastest.
size_t FlatIndex(const Action& a, const DecisionSpace& space);
Action Unflatten(size_t index, const DecisionSpace& space);

// Number of Q-value outputs under action branching: the sum of dimension sizes.
size_t BranchOutputCount(const DecisionSpace& space);

struct LatencyEntry {
  double detector_s = 0.0;
  std::optional<double> tracker_s;
};

// Latency table keyed by (action, contention level). Contention levels run
// 0..max_level(); for a fixed action latency is nondecreasing in level.
class RuntimeProfile {
 public:
  RuntimeProfile() = default;
  RuntimeProfile(std::string device, const DecisionSpace& space);

  const std::string& device_name() const { return device_; }
  int max_level() const { return max_level_; }
  // Tracker cost used when an entry carries no explicit tracker latency.
  double tracker_cost_fraction() const { return tracker_cost_fraction_; }
  void set_tracker_cost_fraction(double f) { tracker_cost_fraction_ = f; }

  void Set(const Action& a, int level, LatencyEntry entry);
  std::optional<LatencyEntry> Get(const Action& a, int level) const;

  // Fills missing intermediate levels by linear interpolation (returns the
  // number of filled cells) and validates positivity, monotonicity in
  // contention and full coverage of the space. Throws Error("schema").
  int Finalize();

  Json ToJson() const;
  // Loading finalizes; interpolated cells are reported on stderr.
  static RuntimeProfile FromJson(const Json& j, const DecisionSpace& space);

  // latency(level) = base * (1 + alpha * level^gamma) for every action.
  static RuntimeProfile FromCurve(std::string device, const DecisionSpace& space,
                                  const std::function<double(const Action&)>& base_latency_s,
                                  double alpha, double gamma, int max_level);

  const DecisionSpace& space() const { return space_; }

 private:
  std::string device_;
  DecisionSpace space_;
  int max_level_ = 0;
  double tracker_cost_fraction_ = 0.25;
  std::map<std::pair<size_t, int>, LatencyEntry> table_;
};

// Deterministic detector latency in seconds. Throws Error("range") naming the
// action and level when the cell is absent.
double LookupLatency(const RuntimeProfile& profile, const Action& a, int contention);
// Tracker-path latency: explicit entry or tracker_cost_fraction * detector.
double LookupTrackerLatency(const RuntimeProfile& profile, const Action& a, int contention);

}  // namespace streamctl

#endif  // STREAMCTL_CONFIG_SPACE_H_
