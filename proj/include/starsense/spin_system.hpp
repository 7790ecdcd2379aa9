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

#include "starsense/types.hpp"

namespace starsense {

// Position of a spin in the two-step star topology. Derived from the label:
// CC, CS*, HC, HS*.
enum class SpinRole { center, side, center_proton, side_proton, other };

SpinRole role_from_label(std::string_view label);

struct Spin {
  std::string name;
  std::string species;  // nuclide tag, e.g. "13C", "1H"
  double shift_ppm = 0.0;
  SpinRole role = SpinRole::other;
};

struct Coupling {
  std::string a;
  std::string b;
  double j_rad_s = 0.0;
};

// Immutable roster of spins with chemical shifts and scalar couplings. The
// roster order fixes the tensor-factor order everywhere (spin 0 leftmost).
class SpinSystem {
 public:
  SpinSystem(std::vector<Spin> spins, const std::vector<Coupling>& couplings,
             std::map<std::string, double> reference_frequency_hz);

  std::size_t size() const { return spins_.size(); }
  std::size_t dim() const { return std::size_t{1} << spins_.size(); }

  const std::vector<Spin>& spins() const { return spins_; }
  const Spin& spin(std::size_t i) const { return spins_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws std::invalid_argument
  bool contains(std::string_view name) const { return find(name).has_value(); }
  std::vector<std::size_t> indices_with_role(SpinRole role) const;

  // Scalar coupling J in rad/s; symmetric, zero diagonal.
  double coupling(std::size_t i, std::size_t j) const { return couplings_.at(i * size() + j); }
  std::vector<Coupling> couplings() const;

  const std::map<std::string, double>& reference_frequencies_hz() const { return reference_hz_; }
  double reference_frequency_hz(const std::string& species) const;

  // Chemically shifted Larmor offset from the species reference, rad/s.
  double larmor_rad_s(std::size_t i) const;
  double ppm_to_rad_s(const std::string& species, double ppm) const;
  double rad_s_to_ppm(const std::string& species, double rad_s) const;

  // Register with the named spins removed (their couplings go with them).
  SpinSystem without(const std::vector<std::string>& names) const;
  // Same register, every coupling touching the named spins set to zero.
  SpinSystem with_couplings_zeroed(const std::vector<std::string>& names) const;

  bool operator==(const SpinSystem&) const = default;

 private:
  std::vector<Spin> spins_;
  std::vector<double> couplings_;  // row-major size()*size()
  std::map<std::string, double> reference_hz_;
};

// Molecule definition file: key/value text with `spin = NAME SPECIES PPM`,
// `coupling = A B J_RAD_S` (2pi*x allowed) and
// `reference_frequency_hz.<species> = HZ` lines.
SpinSystem parse_molecule(std::string_view text, const std::string& source = "<string>");
SpinSystem load_molecule(const std::filesystem::path& path);
std::string format_molecule(const SpinSystem& system, const std::string& title = "");

// 13C-labelled 2-propanol (three C, HC, six HS) with the measured shifts and
// couplings; H-H and the unresolved (NR) couplings are zero, and each CS only
// couples to its own three methyl protons.
SpinSystem two_propanol();

}  // namespace starsense
