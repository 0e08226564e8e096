//
// Copyright 2026 The pdbrw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pdbrw::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidConfig = 2,
  kResourceCap = 3,
};

enum class KeyType { count, real, beta, seed, choice, real_list, flag, path };

struct KeySpec {
  std::string name;  ///< flag name without dashes; also the config-file key
  KeyType type;
  std::string help;
  bool required = false;
  nlohmann::ordered_json default_value;  ///< null: absent unless given
  std::vector<std::string> choices;      ///< KeyType::choice only
};

const std::vector<std::string>& subcommands();

/// Keys accepted by a subcommand, in canonical order. Throws ParameterError
/// for an unknown subcommand.
const std::vector<KeySpec>& keys_for(const std::string& subcommand);

/// Fully resolved experiment: every accepted key carries its canonical value
/// (defaults filled in), so two configs describing the same run compare equal.
struct ExperimentConfig {
  std::string subcommand;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
  /// Inverse of to_json; validates against the subcommand schema.
  static ExperimentConfig from_json(const nlohmann::ordered_json& j);

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.subcommand == b.subcommand && a.values == b.values;
  }
};

/// Merges config-file values with raw flag strings (flags win), checks the
/// schema and fills defaults. Throws ParameterError on any violation.
ExperimentConfig resolve_config(const std::string& subcommand,
                                const nlohmann::ordered_json& file_values,
                                const std::map<std::string, std::string>& flags);

struct ExperimentResult {
  /// (path, contents) pairs; path is empty for the stdout document.
  std::vector<std::pair<std::string, std::string>> files;
  nlohmann::ordered_json summary;
};

/// Runs the computation without touching the filesystem.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Runs, writes outputs atomically and prints the summary line. Returns the
/// process exit code; outputs from a failed run are removed.
int execute(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Full command-line entry point.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pdbrw::cli
