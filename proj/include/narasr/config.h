// narasr/config.h

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

#ifndef NARASR_CONFIG_H_
#define NARASR_CONFIG_H_

#include <map>
#include <set>
#include <string>

namespace narasr {

// UTF-8 "key = value" lines; '#' starts a comment; blank lines are ignored.
// Later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig ParseFile(const std::string& path);
  static KeyValueConfig ParseString(const std::string& text,
                                    const std::string& origin = "<string>");

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  void Set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Each getter leaves *out untouched when the key is absent and throws
  // ConfigError naming the key when the value does not parse.
  void Get(const std::string& key, int* out) const;
  void Get(const std::string& key, long* out) const;
  void Get(const std::string& key, double* out) const;
  void Get(const std::string& key, bool* out) const;
  void Get(const std::string& key, std::string* out) const;

  // Throws ConfigError for the first key not in `known`.
  void RejectUnknown(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string ToString() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace narasr

#endif  // NARASR_CONFIG_H_
