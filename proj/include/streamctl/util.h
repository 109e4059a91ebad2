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
#ifndef STREAMCTL_UTIL_H_
#define STREAMCTL_UTIL_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace streamctl {

using Json = nlohmann::json;

// All library failures surface as this exception. `kind` is a short stable
// tag ("io", "schema", "range", "numeric", ...) for the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// splitmix64 finalizer.
uint64_t Mix64(uint64_t x);

// Order-sensitive combination of seed words. Used to derive independent,
// reproducible random streams from (seed, sequence, frame, ...) tuples.
uint64_t MixSeed(std::initializer_list<uint64_t> words);

// 64-bit FNV-1a.
uint64_t Fnv1a(std::string_view bytes);
std::string HexDigest(uint64_t h);

// Hash of a file's bytes as 16 hex characters.
std::string HashFile(const std::string& path);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

std::vector<Json> ReadJsonLines(const std::string& path);
void WriteJsonLines(const std::string& path, std::span<const Json> rows);
Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& value);

// Population mean and standard deviation; both 0 for an empty input.
double Mean(std::span<const double> xs);
double PopulationStd(std::span<const double> xs);

// Shortest round-trip decimal formatting, used for CSV output so that
// re-runs produce byte-identical files.
std::string FormatDouble(double v);

// Diagnostics go to stderr unless disabled (tests silence them).
void Warn(const std::string& message);
void SetWarningsEnabled(bool enabled);

}  // namespace streamctl

#endif  // STREAMCTL_UTIL_H_
