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
#ifndef STREAMCTL_TOOLS_COMMANDS_H_
#define STREAMCTL_TOOLS_COMMANDS_H_

#include <string>
#include <vector>

namespace streamctl::cli {

// Parses and runs one invocation. `args` excludes the program name. Failures
// print {"error": {"kind", "message"}} on stderr; the return value is the exit
// code (0 ok, 1 runtime error, 2 usage error, 3 replay mismatch).
int Run(const std::vector<std::string>& args);

}  // namespace streamctl::cli

#endif  // STREAMCTL_TOOLS_COMMANDS_H_
