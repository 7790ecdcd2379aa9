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

#include "starsense/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "starsense/types.hpp"

namespace starsense {

double wrap_phase(double rad) {
  double r = std::remainder(rad, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
      source_(source),
      line_(line) {}

ConfigError::ConfigError(const std::string& message) : std::runtime_error(message) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::optional<double> parse_quantity(std::string_view text) {
  text = trim(text);
  double factor = 1.0;
  if (text.starts_with("2pi*")) {
    factor = kTwoPi;
    text.remove_prefix(4);
  } else if (text.starts_with("pi*")) {
    factor = kPi;
    text.remove_prefix(3);
  }
  auto v = parse_double(text);
  if (!v) return std::nullopt;
  return factor * *v;
}

std::string format_quantity(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<std::vector<double>> parse_quantity_list(std::string_view text) {
  std::string normalized(text);
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::vector<double> out;
  for (const auto& word : split_words(normalized)) {
    auto v = parse_quantity(word);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

KeyValueDocument KeyValueDocument::parse(std::string_view text, std::string source) {
  KeyValueDocument doc;
  doc.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(doc.source_, line_no, "expected `key = value`");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(doc.source_, line_no, "empty key");
    doc.entries_.push_back({std::string(key), std::string(value), line_no});
    if (eol == text.size()) break;
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const KeyValueEntry* KeyValueDocument::find(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

std::optional<std::string> KeyValueDocument::get(std::string_view key) const {
  if (const auto* e = find(key)) return e->value;
  return std::nullopt;
}

std::vector<const KeyValueEntry*> KeyValueDocument::all(std::string_view key) const {
  std::vector<const KeyValueEntry*> out;
  for (const auto& e : entries_) {
    if (e.key == key) out.push_back(&e);
  }
  return out;
}

double KeyValueDocument::number(std::string_view key) const {
  const auto* e = find(key);
  if (!e) throw ConfigError(source_, 0, "missing required key `" + std::string(key) + "`");
  auto v = parse_quantity(e->value);
  if (!v) fail(*e, "malformed number `" + e->value + "`");
  return *v;
}

double KeyValueDocument::number_or(std::string_view key, double fallback) const {
  return find(key) ? number(key) : fallback;
}

std::string KeyValueDocument::string_or(std::string_view key, std::string fallback) const {
  if (const auto* e = find(key)) return e->value;
  return fallback;
}

void KeyValueDocument::fail(const KeyValueEntry& entry, const std::string& message) const {
  throw ConfigError(source_, entry.line, message);
}

}  // namespace starsense
