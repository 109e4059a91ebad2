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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("streamctl_cli_" + std::to_string(getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args) {
    const std::string cmd = std::string(STREAMCTL_CLI_PATH) + " " + args + " >" + (dir_ / "out.txt").string() +
                            " 2>" + (dir_ / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string Err() const {
    std::ifstream in(dir_ / "err.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("no-such-command"), 2);
  EXPECT_EQ(Run("evaluate --out-dir " + dir_.string()), 2);
}

TEST_F(CliTest, MissingInputIsReported) {
  EXPECT_EQ(Run("efficiency --input " + (dir_ / "absent.json").string() + " --out-dir " + dir_.string()), 1);
  EXPECT_NE(Err().find("\"error\""), std::string::npos);
}

TEST_F(CliTest, EfficiencyWritesReportAndManifest) {
  const std::string cfg = std::string(STREAMCTL_SOURCE_DIR) + "/configs/efficiency_uniform.json";
  ASSERT_EQ(Run("efficiency --input " + cfg + " --out-dir " + (dir_ / "e").string()), 0) << Err();
  EXPECT_TRUE(fs::exists(dir_ / "e" / "efficiency.json"));
  EXPECT_TRUE(fs::exists(dir_ / "e" / "manifest.json"));
  ASSERT_EQ(Run("replay --manifest " + (dir_ / "e" / "manifest.json").string() + " --out-dir " +
                (dir_ / "r").string()),
            0)
      << Err();
}

}  // namespace
