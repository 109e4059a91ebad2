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
#include "streamctl/config_space.h"

#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

namespace streamctl {

Json Choice::ToJson() const {
  if (value.has_value()) return Json(*value);
  return Json(label);
}

Choice Choice::FromJson(const Json& j) {
  Choice c;
  if (j.is_number()) {
    c.value = j.get<double>();
    c.label = j.is_number_integer() ? std::to_string(j.get<long long>()) : FormatDouble(*c.value);
  } else if (j.is_string()) {
    c.label = j.get<std::string>();
  } else {
    throw Error("schema", "choice must be a number or string: " + j.dump());
  }
  return c;
}

std::optional<size_t> DecisionDimension::Find(const Json& choice) const {
  for (size_t i = 0; i < choices.size(); ++i) {
    const Choice& c = choices[i];
    if (choice.is_number() && c.value.has_value() && *c.value == choice.get<double>()) return i;
    if (choice.is_string() && c.label == choice.get<std::string>()) return i;
  }
  return std::nullopt;
}

DecisionSpace::DecisionSpace(std::vector<DecisionDimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error("schema", "decision space needs at least one dimension");
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (!names.insert(d.name).second) throw Error("schema", "duplicate dimension: " + d.name);
    if (d.choices.size() < 2) throw Error("schema", "dimension '" + d.name + "' needs >= 2 choices");
    std::set<std::string> labels;
    for (const auto& c : d.choices) {
      if (!labels.insert(c.label).second) {
        throw Error("schema", "duplicate choice '" + c.label + "' in dimension " + d.name);
      }
    }
  }
}

std::optional<size_t> DecisionSpace::Find(const std::string& name) const {
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

size_t DecisionSpace::flat_size() const {
  size_t n = 1;
  for (const auto& d : dims_) n *= d.size();
  return n;
}

std::vector<size_t> DecisionSpace::sizes() const {
  std::vector<size_t> out;
  out.reserve(dims_.size());
  for (const auto& d : dims_) out.push_back(d.size());
  return out;
}

void DecisionSpace::Validate(const Action& a) const {
  if (a.index.size() != dims_.size()) {
    throw Error("range", "action has " + std::to_string(a.index.size()) + " entries, space has " +
                             std::to_string(dims_.size()) + " dimensions");
  }
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (a.index[i] < 0 || static_cast<size_t>(a.index[i]) >= dims_[i].size()) {
      throw Error("range", "index " + std::to_string(a.index[i]) + " out of range for dimension " +
                               dims_[i].name);
    }
  }
}

Action DecisionSpace::Parse(const std::string& text) const {
  Action a = MidAction();
  std::stringstream ss(text);
  std::string item;
  std::set<std::string> seen;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("schema", "expected dim=choice, got '" + item + "'");
    const std::string name = item.substr(0, eq);
    const std::string label = item.substr(eq + 1);
    const auto dim = Find(name);
    if (!dim) throw Error("schema", "unknown dimension '" + name + "'");
    const auto idx = dims_[*dim].Find(Json(label));
    if (!idx) throw Error("schema", "unknown choice '" + label + "' for dimension " + name);
    a.index[*dim] = static_cast<int>(*idx);
    seen.insert(name);
  }
  if (seen.size() != dims_.size()) {
    for (const auto& d : dims_) {
      if (!seen.count(d.name)) throw Error("schema", "action '" + text + "' misses dimension " + d.name);
    }
  }
  return a;
}

std::string DecisionSpace::Format(const Action& a) const {
  Validate(a);
  std::string out;
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += ',';
    out += dims_[i].name + "=" + dims_[i].choices[a.index[i]].label;
  }
  return out;
}

Json DecisionSpace::ActionToJson(const Action& a) const {
  Validate(a);
  Json obj = Json::object();
  for (size_t i = 0; i < dims_.size(); ++i) obj[dims_[i].name] = dims_[i].choices[a.index[i]].ToJson();
  return obj;
}

Action DecisionSpace::ActionFromJson(const Json& obj) const {
  if (!obj.is_object()) throw Error("schema", "action must be an object: " + obj.dump());
  Action a;
  a.index.resize(dims_.size());
  for (size_t i = 0; i < dims_.size(); ++i) {
    const auto it = obj.find(dims_[i].name);
    if (it == obj.end()) throw Error("schema", "action " + obj.dump() + " misses dimension " + dims_[i].name);
    const auto idx = dims_[i].Find(*it);
    if (!idx) throw Error("schema", "unknown choice " + it->dump() + " for dimension " + dims_[i].name);
    a.index[i] = static_cast<int>(*idx);
  }
  return a;
}

Action DecisionSpace::MidAction() const {
  Action a;
  for (const auto& d : dims_) a.index.push_back(static_cast<int>(d.size() / 2));
  return a;
}

Json DecisionSpace::ToJson() const {
  Json dims = Json::array();
  for (const auto& d : dims_) {
    Json choices = Json::array();
    for (const auto& c : d.choices) choices.push_back(c.ToJson());
    dims.push_back({{"name", d.name}, {"choices", choices}});
  }
  return Json{{"dimensions", dims}};
}

DecisionSpace DecisionSpace::FromJson(const Json& j) {
  if (!j.contains("dimensions") || !j["dimensions"].is_array()) {
    throw Error("schema", "decision space needs a 'dimensions' array");
  }
  std::vector<DecisionDimension> dims;
  for (const Json& d : j["dimensions"]) {
    DecisionDimension dim;
    dim.name = d.at("name").get<std::string>();
    for (const Json& c : d.at("choices")) dim.choices.push_back(Choice::FromJson(c));
    dims.push_back(std::move(dim));
  }
  return DecisionSpace(std::move(dims));
}

size_t FlatIndex(const Action& a, const DecisionSpace& space) {
  space.Validate(a);
  size_t idx = 0;
  for (size_t i = 0; i < space.dimension_count(); ++i) {
    idx = idx * space.dimension(i).size() + static_cast<size_t>(a.index[i]);
  }
  return idx;
}

Action Unflatten(size_t index, const DecisionSpace& space) {
  if (index >= space.flat_size()) {
    throw Error("range", "flat index " + std::to_string(index) + " out of range [0, " +
                             std::to_string(space.flat_size()) + ")");
  }
  Action a;
  a.index.resize(space.dimension_count());
  for (size_t i = space.dimension_count(); i-- > 0;) {
    const size_t n = space.dimension(i).size();
    a.index[i] = static_cast<int>(index % n);
    index /= n;
  }
  return a;
}

size_t BranchOutputCount(const DecisionSpace& space) {
  size_t n = 0;
  for (const auto& d : space.dimensions()) n += d.size();
  return n;
}

RuntimeProfile::RuntimeProfile(std::string device, const DecisionSpace& space)
    : device_(std::move(device)), space_(space) {}

void RuntimeProfile::Set(const Action& a, int level, LatencyEntry entry) {
  if (level < 0) throw Error("schema", "contention level must be >= 0");
  table_[{FlatIndex(a, space_), level}] = entry;
  max_level_ = std::max(max_level_, level);
}

std::optional<LatencyEntry> RuntimeProfile::Get(const Action& a, int level) const {
  const auto it = table_.find({FlatIndex(a, space_), level});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

int RuntimeProfile::Finalize() {
  int filled = 0;
  const size_t n = space_.flat_size();
  for (size_t flat = 0; flat < n; ++flat) {
    // Known levels for this action.
    std::vector<int> known;
    for (int c = 0; c <= max_level_; ++c) {
      if (table_.count({flat, c})) known.push_back(c);
    }
    if (known.empty() || known.front() != 0) {
      throw Error("schema", "profile '" + device_ + "' has no level-0 entry for action " +
                                space_.Format(Unflatten(flat, space_)));
    }
    if (known.back() != max_level_) {
      throw Error("schema", "profile '" + device_ + "' has no level-" + std::to_string(max_level_) +
                                " entry for action " + space_.Format(Unflatten(flat, space_)));
    }
    for (size_t k = 0; k + 1 < known.size(); ++k) {
      const int lo = known[k], hi = known[k + 1];
      const LatencyEntry a = table_.at({flat, lo}), b = table_.at({flat, hi});
      for (int c = lo + 1; c < hi; ++c) {
        const double w = static_cast<double>(c - lo) / (hi - lo);
        LatencyEntry e;
        e.detector_s = a.detector_s + w * (b.detector_s - a.detector_s);
        if (a.tracker_s && b.tracker_s) e.tracker_s = *a.tracker_s + w * (*b.tracker_s - *a.tracker_s);
        table_[{flat, c}] = e;
        ++filled;
      }
    }
    double prev = 0.0;
    for (int c = 0; c <= max_level_; ++c) {
      const LatencyEntry& e = table_.at({flat, c});
      if (!(e.detector_s > 0.0) || !std::isfinite(e.detector_s) ||
          (e.tracker_s && !(*e.tracker_s > 0.0))) {
        throw Error("schema", "non-positive latency for action " + space_.Format(Unflatten(flat, space_)) +
                                  " at level " + std::to_string(c));
      }
      if (c > 0 && e.detector_s < prev) {
        throw Error("schema", "latency decreases with contention for action " +
                                  space_.Format(Unflatten(flat, space_)) + " at level " + std::to_string(c));
      }
      prev = e.detector_s;
    }
  }
  return filled;
}

Json RuntimeProfile::ToJson() const {
  Json entries = Json::array();
  for (const auto& [key, e] : table_) {
    Json row{{"action", space_.ActionToJson(Unflatten(key.first, space_))},
             {"contention", key.second},
             {"latency_s", e.detector_s}};
    if (e.tracker_s) row["tracker_latency_s"] = *e.tracker_s;
    entries.push_back(std::move(row));
  }
  return Json{{"device", device_}, {"tracker_cost_fraction", tracker_cost_fraction_}, {"entries", entries}};
}

RuntimeProfile RuntimeProfile::FromJson(const Json& j, const DecisionSpace& space) {
  RuntimeProfile p(j.at("device").get<std::string>(), space);
  if (j.contains("tracker_cost_fraction")) p.tracker_cost_fraction_ = j["tracker_cost_fraction"].get<double>();
  for (const Json& row : j.at("entries")) {
    LatencyEntry e;
    e.detector_s = row.at("latency_s").get<double>();
    if (row.contains("tracker_latency_s")) e.tracker_s = row["tracker_latency_s"].get<double>();
    p.Set(space.ActionFromJson(row.at("action")), row.at("contention").get<int>(), e);
  }
  const int filled = p.Finalize();
  if (filled > 0) {
    Warn("profile '" + p.device_ + "': interpolated " + std::to_string(filled) + " missing contention cells");
  }
  return p;
}

RuntimeProfile RuntimeProfile::FromCurve(std::string device, const DecisionSpace& space,
                                         const std::function<double(const Action&)>& base_latency_s,
                                         double alpha, double gamma, int max_level) {
  RuntimeProfile p(std::move(device), space);
  for (size_t flat = 0; flat < space.flat_size(); ++flat) {
    const Action a = Unflatten(flat, space);
    const double base = base_latency_s(a);
    for (int c = 0; c <= max_level; ++c) {
      p.Set(a, c, LatencyEntry{base * (1.0 + alpha * std::pow(static_cast<double>(c), gamma)), std::nullopt});
    }
  }
  p.Finalize();
  return p;
}

double LookupLatency(const RuntimeProfile& profile, const Action& a, int contention) {
  const auto e = profile.Get(a, contention);
  if (!e) {
    throw Error("range", "no latency for action " + profile.space().Format(a) + " at contention level " +
                             std::to_string(contention) + " in profile '" + profile.device_name() + "'");
  }
  return e->detector_s;
}

double LookupTrackerLatency(const RuntimeProfile& profile, const Action& a, int contention) {
  const auto e = profile.Get(a, contention);
  if (!e) {
    throw Error("range", "no latency for action " + profile.space().Format(a) + " at contention level " +
                             std::to_string(contention) + " in profile '" + profile.device_name() + "'");
  }
  return e->tracker_s ? *e->tracker_s : e->detector_s * profile.tracker_cost_fraction();
}

}  // namespace streamctl
