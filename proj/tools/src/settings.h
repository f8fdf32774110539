// Copyright (c) 2026 The sesscomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SESSCOMP_CLI_SETTINGS_H_
#define SESSCOMP_CLI_SETTINGS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace sesscomp::cli {

enum class Kind { kInt, kUint, kDouble, kBool, kString, kStringList, kDoubleList };

struct KeySpec {
  std::string name;
  Kind kind;
  nlohmann::json fallback;  // null: unset unless given
  std::string help;
  // Paths are left out of the digest so that relocated reruns match.
  bool digest = true;
};

// Settings of one subcommand: defaults, then the --config JSON file, then
// command-line flags. Flag names are the keys with '_' spelled '-'.
class Settings {
 public:
  Settings(std::string command, std::vector<KeySpec> keys);

  void Register(CLI::App& sub);
  // Throws Error(kInvalidArgument) on unknown keys and type errors.
  void Resolve();

  bool has(const std::string& key) const;
  void Require(const std::string& key) const;

  long long Int(const std::string& key) const;
  std::uint64_t Uint(const std::string& key) const;
  double Double(const std::string& key) const;
  bool Bool(const std::string& key) const;
  std::string String(const std::string& key) const;
  std::vector<std::string> Strings(const std::string& key) const;
  std::vector<double> Doubles(const std::string& key) const;

  // 16 hex digits of FNV-1a over the canonical dump of the digested settings.
  std::string Digest() const;
  const nlohmann::json& values() const { return values_; }

 private:
  const KeySpec& Spec(const std::string& key) const;
  nlohmann::json FromFlag(const KeySpec& spec, const std::vector<std::string>& raw) const;
  void CheckType(const KeySpec& spec, const nlohmann::json& v, const std::string& where) const;

  std::string command_;
  std::vector<KeySpec> keys_;
  std::string config_path_;
  std::map<std::string, std::vector<std::string>> raw_;
  std::map<std::string, CLI::Option*> options_;
  nlohmann::json values_ = nlohmann::json::object();
};

std::string Fnv1aHex(const std::string& bytes);

}  // namespace sesscomp::cli

#endif  // SESSCOMP_CLI_SETTINGS_H_
