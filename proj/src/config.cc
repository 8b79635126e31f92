// src/config.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "narasr/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "narasr/errors.h"

namespace narasr {

namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
void ParseNumber(const std::string& key, const std::string& text, T* out) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  *out = value;
}

}  // namespace

KeyValueConfig KeyValueConfig::ParseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseString(ss.str(), path);
}

KeyValueConfig KeyValueConfig::ParseString(const std::string& text,
                                           const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = Trim(line.substr(eq + 1));
  }
  return cfg;
}

void KeyValueConfig::Get(const std::string& key, int* out) const {
  auto it = values_.find(key);
  if (it != values_.end()) ParseNumber(key, it->second, out);
}

void KeyValueConfig::Get(const std::string& key, long* out) const {
  auto it = values_.find(key);
  if (it != values_.end()) ParseNumber(key, it->second, out);
}

void KeyValueConfig::Get(const std::string& key, double* out) const {
  auto it = values_.find(key);
  if (it != values_.end()) ParseNumber(key, it->second, out);
}

void KeyValueConfig::Get(const std::string& key, bool* out) const {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") {
    *out = true;
  } else if (v == "false" || v == "0" || v == "no") {
    *out = false;
  } else {
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
  }
}

void KeyValueConfig::Get(const std::string& key, std::string* out) const {
  auto it = values_.find(key);
  if (it != values_.end()) *out = it->second;
}

void KeyValueConfig::RejectUnknown(const std::set<std::string>& known) const {
  for (const auto& kv : values_) {
    if (!known.count(kv.first)) {
      throw ConfigError(origin_ + ": unknown key '" + kv.first + "'");
    }
  }
}

std::string KeyValueConfig::ToString() const {
  std::string out;
  for (const auto& kv : values_) out += kv.first + " = " + kv.second + "\n";
  return out;
}

}  // namespace narasr
