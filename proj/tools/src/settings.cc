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

#include "settings.h"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "sesscomp/error.h"

namespace sesscomp::cli {

using nlohmann::json;

namespace {

Error Invalid(const std::string& msg) { return Error(Errc::kInvalidArgument, msg); }

std::string FlagName(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

bool IsList(Kind k) { return k == Kind::kStringList || k == Kind::kDoubleList; }

const char* KindName(Kind k) {
  switch (k) {
    case Kind::kInt: return "an integer";
    case Kind::kUint: return "a non-negative integer";
    case Kind::kDouble: return "a number";
    case Kind::kBool: return "true or false";
    case Kind::kString: return "a string";
    case Kind::kStringList: return "a list of strings";
    case Kind::kDoubleList: return "a list of numbers";
  }
  return "?";
}

long long ParseInt(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Invalid(what + ": '" + s + "' is not an integer");
  return v;
}

double ParseDouble(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Invalid(what + ": '" + s + "' is not a number");
  return v;
}

}  // namespace

std::string Fnv1aHex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Settings::Settings(std::string command, std::vector<KeySpec> keys)
    : command_(std::move(command)), keys_(std::move(keys)) {}

void Settings::Register(CLI::App& sub) {
  sub.add_option("--config", config_path_, "JSON file with settings; flags override it");
  for (const auto& k : keys_) {
    std::string help = k.help;
    if (!k.fallback.is_null()) help += " (default " + k.fallback.dump() + ")";
    CLI::Option* opt = sub.add_option(FlagName(k.name), raw_[k.name], help);
    if (!IsList(k.kind)) opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    options_[k.name] = opt;
  }
}

const KeySpec& Settings::Spec(const std::string& key) const {
  for (const auto& k : keys_)
    if (k.name == key) return k;
  throw Invalid("internal: " + command_ + " has no setting '" + key + "'");
}

void Settings::CheckType(const KeySpec& spec, const json& v, const std::string& where) const {
  bool ok = false;
  switch (spec.kind) {
    case Kind::kInt: ok = v.is_number_integer(); break;
    case Kind::kUint: ok = v.is_number_unsigned(); break;
    case Kind::kDouble: ok = v.is_number(); break;
    case Kind::kBool: ok = v.is_boolean(); break;
    case Kind::kString: ok = v.is_string(); break;
    case Kind::kStringList:
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_string();
      break;
    case Kind::kDoubleList:
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_number();
      break;
  }
  if (!ok) throw Invalid(where + ": setting '" + spec.name + "' must be " + KindName(spec.kind));
}

json Settings::FromFlag(const KeySpec& spec, const std::vector<std::string>& raw) const {
  const std::string what = FlagName(spec.name);
  switch (spec.kind) {
    case Kind::kInt: return ParseInt(raw.front(), what);
    case Kind::kUint: {
      const std::string& s = raw.front();
      if (!s.empty() && s[0] == '-') throw Invalid(what + ": '" + s + "' is negative");
      std::size_t used = 0;
      std::uint64_t v = 0;
      try {
        v = std::stoull(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size()) throw Invalid(what + ": '" + s + "' is not an integer");
      return v;
    }
    case Kind::kDouble: return ParseDouble(raw.front(), what);
    case Kind::kBool: {
      const std::string& s = raw.front();
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw Invalid(what + ": expected true or false, got '" + s + "'");
    }
    case Kind::kString: return raw.front();
    case Kind::kStringList: return raw;
    case Kind::kDoubleList: {
      json out = json::array();
      for (const auto& s : raw) out.push_back(ParseDouble(s, what));
      return out;
    }
  }
  return nullptr;
}

void Settings::Resolve() {
  for (const auto& k : keys_)
    if (!k.fallback.is_null()) values_[k.name] = k.fallback;

  if (!config_path_.empty()) {
    std::ifstream is(config_path_);
    if (!is) throw Error(Errc::kIo, "cannot open config " + config_path_);
    json file;
    try {
      file = json::parse(is);
    } catch (const json::parse_error& e) {
      throw Invalid("config " + config_path_ + ": " + e.what());
    }
    if (!file.is_object()) throw Invalid("config " + config_path_ + " must hold a JSON object");
    for (const auto& [key, v] : file.items()) {
      bool known = false;
      for (const auto& k : keys_) known = known || k.name == key;
      if (!known) throw Invalid("config " + config_path_ + ": unknown key '" + key + "' for " + command_);
      CheckType(Spec(key), v, "config " + config_path_);
      values_[key] = v;
    }
  }
  for (const auto& k : keys_) {
    if (options_.count(k.name) && options_.at(k.name)->count() > 0) {
      values_[k.name] = FromFlag(k, raw_.at(k.name));
    }
  }
}

bool Settings::has(const std::string& key) const {
  Spec(key);
  return values_.contains(key);
}

void Settings::Require(const std::string& key) const {
  if (!has(key)) {
    throw Invalid(command_ + ": missing required setting '" + key + "' (pass " + FlagName(key) +
                  " or set it in --config)");
  }
}

long long Settings::Int(const std::string& key) const {
  Require(key);
  return values_.at(key).get<long long>();
}

std::uint64_t Settings::Uint(const std::string& key) const {
  Require(key);
  return values_.at(key).get<std::uint64_t>();
}

double Settings::Double(const std::string& key) const {
  Require(key);
  return values_.at(key).get<double>();
}

bool Settings::Bool(const std::string& key) const {
  Require(key);
  return values_.at(key).get<bool>();
}

std::string Settings::String(const std::string& key) const {
  Require(key);
  return values_.at(key).get<std::string>();
}

std::vector<std::string> Settings::Strings(const std::string& key) const {
  if (!has(key)) return {};
  return values_.at(key).get<std::vector<std::string>>();
}

std::vector<double> Settings::Doubles(const std::string& key) const {
  Require(key);
  return values_.at(key).get<std::vector<double>>();
}

std::string Settings::Digest() const {
  json d = json::object();
  d["command"] = command_;
  for (const auto& k : keys_)
    if (k.digest && values_.contains(k.name)) d[k.name] = values_.at(k.name);
  return Fnv1aHex(d.dump());
}

}  // namespace sesscomp::cli
