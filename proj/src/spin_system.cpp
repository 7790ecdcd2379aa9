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

#include "starsense/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "starsense/keyvalue.hpp"

namespace starsense {

SpinRole role_from_label(std::string_view label) {
  if (label == "CC") return SpinRole::center;
  if (label == "HC") return SpinRole::center_proton;
  if (label.starts_with("CS")) return SpinRole::side;
  if (label.starts_with("HS")) return SpinRole::side_proton;
  return SpinRole::other;
}

SpinSystem::SpinSystem(std::vector<Spin> spins, const std::vector<Coupling>& couplings,
                       std::map<std::string, double> reference_frequency_hz)
    : spins_(std::move(spins)), reference_hz_(std::move(reference_frequency_hz)) {
  if (spins_.empty()) throw std::invalid_argument("spin system: empty roster");
  if (spins_.size() > 14) throw std::invalid_argument("spin system: more than 14 spins");
  std::set<std::string> seen;
  for (const auto& s : spins_) {
    if (s.name.empty()) throw std::invalid_argument("spin system: empty spin name");
    if (!seen.insert(s.name).second) {
      throw std::invalid_argument("spin system: duplicate spin name " + s.name);
    }
    if (!std::isfinite(s.shift_ppm)) throw std::invalid_argument("spin system: non-finite shift");
    const auto it = reference_hz_.find(s.species);
    if (it == reference_hz_.end() || !(it->second > 0.0)) {
      throw std::invalid_argument("spin system: no reference frequency for species " + s.species);
    }
  }
  couplings_.assign(size() * size(), 0.0);
  for (const auto& c : couplings) {
    const auto i = index_of(c.a);
    const auto j = index_of(c.b);
    if (i == j) throw std::invalid_argument("spin system: self coupling on " + c.a);
    if (!(c.j_rad_s >= 0.0) || !std::isfinite(c.j_rad_s)) {
      throw std::invalid_argument("spin system: coupling " + c.a + "-" + c.b + " must be >= 0");
    }
    couplings_[i * size() + j] = c.j_rad_s;
    couplings_[j * size() + i] = c.j_rad_s;
  }
}

std::optional<std::size_t> SpinSystem::find(std::string_view name) const {
  for (std::size_t i = 0; i < spins_.size(); ++i) {
    if (spins_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t SpinSystem::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw std::invalid_argument("unknown spin label: " + std::string(name));
}

std::vector<std::size_t> SpinSystem::indices_with_role(SpinRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spins_.size(); ++i) {
    if (spins_[i].role == role) out.push_back(i);
  }
  return out;
}

std::vector<Coupling> SpinSystem::couplings() const {
  std::vector<Coupling> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      if (coupling(i, j) != 0.0) out.push_back({spins_[i].name, spins_[j].name, coupling(i, j)});
    }
  }
  return out;
}

double SpinSystem::reference_frequency_hz(const std::string& species) const {
  const auto it = reference_hz_.find(species);
  if (it == reference_hz_.end()) throw std::invalid_argument("unknown species " + species);
  return it->second;
}

double SpinSystem::ppm_to_rad_s(const std::string& species, double ppm) const {
  return kTwoPi * reference_frequency_hz(species) * ppm * 1e-6;
}

double SpinSystem::rad_s_to_ppm(const std::string& species, double rad_s) const {
  return rad_s / (kTwoPi * reference_frequency_hz(species)) * 1e6;
}

double SpinSystem::larmor_rad_s(std::size_t i) const {
  const auto& s = spin(i);
  return ppm_to_rad_s(s.species, s.shift_ppm);
}

SpinSystem SpinSystem::without(const std::vector<std::string>& names) const {
  std::vector<Spin> kept;
  for (const auto& s : spins_) {
    if (std::find(names.begin(), names.end(), s.name) == names.end()) kept.push_back(s);
  }
  std::vector<Coupling> cs;
  for (const auto& c : couplings()) {
    const bool drop = std::find(names.begin(), names.end(), c.a) != names.end() ||
                      std::find(names.begin(), names.end(), c.b) != names.end();
    if (!drop) cs.push_back(c);
  }
  return SpinSystem(std::move(kept), cs, reference_hz_);
}

SpinSystem SpinSystem::with_couplings_zeroed(const std::vector<std::string>& names) const {
  std::vector<Coupling> cs;
  for (const auto& c : couplings()) {
    const bool drop = std::find(names.begin(), names.end(), c.a) != names.end() ||
                      std::find(names.begin(), names.end(), c.b) != names.end();
    if (!drop) cs.push_back(c);
  }
  return SpinSystem(spins_, cs, reference_hz_);
}

SpinSystem parse_molecule(std::string_view text, const std::string& source) {
  const auto doc = KeyValueDocument::parse(text, source);
  std::vector<Spin> spins;
  std::vector<Coupling> couplings;
  std::map<std::string, double> refs;
  for (const auto& e : doc.entries()) {
    const auto words = split_words(e.value);
    if (e.key == "spin") {
      if (words.size() != 3) doc.fail(e, "expected `spin = NAME SPECIES PPM`");
      auto ppm = parse_quantity(words[2]);
      if (!ppm) doc.fail(e, "malformed shift `" + words[2] + "`");
      spins.push_back({words[0], words[1], *ppm, role_from_label(words[0])});
    } else if (e.key == "coupling") {
      if (words.size() != 3) doc.fail(e, "expected `coupling = A B J_RAD_S`");
      auto j = parse_quantity(words[2]);
      if (!j) doc.fail(e, "malformed coupling `" + words[2] + "`");
      couplings.push_back({words[0], words[1], *j});
    } else if (e.key.starts_with("reference_frequency_hz.")) {
      auto hz = parse_quantity(e.value);
      if (!hz || *hz <= 0.0) doc.fail(e, "reference frequency must be a positive number");
      refs[e.key.substr(std::string_view("reference_frequency_hz.").size())] = *hz;
    } else if (e.key == "name") {
      // informational
    } else {
      doc.fail(e, "unknown key `" + e.key + "`");
    }
  }
  try {
    return SpinSystem(std::move(spins), couplings, std::move(refs));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(source, 0, ex.what());
  }
}

SpinSystem load_molecule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open molecule file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_molecule(buffer.str(), path.string());
}

std::string format_molecule(const SpinSystem& system, const std::string& title) {
  std::ostringstream out;
  if (!title.empty()) out << "name = " << title << "\n";
  for (const auto& [species, hz] : system.reference_frequencies_hz()) {
    out << "reference_frequency_hz." << species << " = " << format_quantity(hz) << "\n";
  }
  for (const auto& s : system.spins()) {
    out << "spin = " << s.name << " " << s.species << " " << format_quantity(s.shift_ppm) << "\n";
  }
  for (const auto& c : system.couplings()) {
    out << "coupling = " << c.a << " " << c.b << " 2pi*" << format_quantity(c.j_rad_s / kTwoPi) << "\n";
  }
  return out.str();
}

SpinSystem two_propanol() {
  std::vector<Spin> spins = {
      {"CC", "13C", 62.6, SpinRole::center},
      {"CS1", "13C", 25.5, SpinRole::side},
      {"CS2", "13C", 25.5, SpinRole::side},
      {"HC", "1H", 3.78, SpinRole::center_proton},
  };
  for (int k = 1; k <= 6; ++k) {
    spins.push_back({"HS" + std::to_string(k), "1H", 1.21, SpinRole::side_proton});
  }
  std::vector<Coupling> couplings = {
      {"CC", "CS1", kTwoPi * 38.4},
      {"CC", "CS2", kTwoPi * 38.4},
      {"CC", "HC", kTwoPi * 140.0},
  };
  for (int k = 1; k <= 6; ++k) {
    const std::string hs = "HS" + std::to_string(k);
    couplings.push_back({"CC", hs, kTwoPi * 4.4});
    couplings.push_back({k <= 3 ? "CS1" : "CS2", hs, kTwoPi * 124.0});
  }
  return SpinSystem(std::move(spins), couplings, {{"13C", 100.6e6}, {"1H", 400.0e6}});
}

}  // namespace starsense
