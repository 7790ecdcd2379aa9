// Copyright 2026 The starsense Authors
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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace starsense {

// One `key = value` line of a configuration file.
struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Line-oriented key/value text: `key = value`, `#` starts a comment, blank
// lines ignored. Keys may repeat (e.g. one `spin = ...` line per spin).
class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::string_view text, std::string source = "<string>");
  static KeyValueDocument load(const std::filesystem::path& path);

  const std::vector<KeyValueEntry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  // Last value for `key`, if any.
  std::optional<std::string> get(std::string_view key) const;
  const KeyValueEntry* find(std::string_view key) const;
  std::vector<const KeyValueEntry*> all(std::string_view key) const;

  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::string string_or(std::string_view key, std::string fallback) const;

  [[noreturn]] void fail(const KeyValueEntry& entry, const std::string& message) const;

 private:
  std::string source_;
  std::vector<KeyValueEntry> entries_;
};

// Parses a scalar. Accepts plain floats plus the `2pi*x` / `pi*x` forms used
// for angular frequencies. Returns nullopt on malformed input.
std::optional<double> parse_quantity(std::string_view text);

// Shortest text that parses back to exactly `v`.
std::string format_quantity(double v);

// Splits on ASCII whitespace.
std::vector<std::string> split_words(std::string_view text);

// Comma- or whitespace-separated list of quantities.
std::optional<std::vector<double>> parse_quantity_list(std::string_view text);

}  // namespace starsense
