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

#include "starsense/hamiltonian.hpp"

#include <cmath>
#include <sstream>

namespace starsense {

FrameOffsets resonance_frame(const SpinSystem& system) {
  FrameOffsets f(system.size());
  for (std::size_t i = 0; i < system.size(); ++i) f[i] = system.larmor_rad_s(i);
  return f;
}

FrameOffsets carrier_frame(const SpinSystem& system, std::string_view carrier_spin,
                           double carrier_offset_rad_s) {
  const auto c = system.index_of(carrier_spin);
  const auto& species = system.spin(c).species;
  FrameOffsets f(system.size());
  for (std::size_t i = 0; i < system.size(); ++i) {
    f[i] = system.spin(i).species == species ? system.larmor_rad_s(c) - carrier_offset_rad_s
                                             : system.larmor_rad_s(i);
  }
  return f;
}

Matrix DiagonalHamiltonian::to_matrix() const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
  for (std::size_t a = 0; a < dim(); ++a) m(a, a) = energies[a];
  return m;
}

DiagonalHamiltonian build_hamiltonian(const SpinSystem& system, const FrameOffsets& frame) {
  const std::size_t n = system.size();
  if (frame.size() != n) throw std::invalid_argument("build_hamiltonian: frame size mismatch");
  DiagonalHamiltonian h;
  h.frame_offsets = frame;
  h.energies.assign(system.dim(), 0.0);

  std::vector<double> omega(n);
  for (std::size_t j = 0; j < n; ++j) omega[j] = system.larmor_rad_s(j) - frame[j];

  for (std::size_t a = 0; a < system.dim(); ++a) {
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double sj = (a & spin_mask(n, j)) ? -1.0 : 1.0;
      e += 0.5 * omega[j] * sj;
      for (std::size_t k = j + 1; k < n; ++k) {
        const double jjk = system.coupling(j, k);
        if (jjk == 0.0) continue;
        const double sk = (a & spin_mask(n, k)) ? -1.0 : 1.0;
        e += 0.25 * jjk * sj * sk;
      }
    }
    h.energies[a] = e;
  }

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const double jjk = system.coupling(j, k);
      if (jjk == 0.0) continue;
      const double gap = std::abs(system.spin(j).species == system.spin(k).species
                                      ? system.larmor_rad_s(j) - system.larmor_rad_s(k)
                                      : kTwoPi * (system.reference_frequency_hz(system.spin(j).species) -
                                                  system.reference_frequency_hz(system.spin(k).species)));
      if (gap < 10.0 * jjk) {
        std::ostringstream msg;
        msg << "secular approximation strained for " << system.spin(j).name << "-"
            << system.spin(k).name << ": |dw| = " << gap << " rad/s < 10 J = " << 10.0 * jjk;
        h.diagnostics.push_back(msg.str());
      }
    }
  }
  return h;
}

Operator free_propagator(const DiagonalHamiltonian& h, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("free_propagator: negative time");
  const auto dim = static_cast<Eigen::Index>(h.dim());
  Matrix u = Matrix::Zero(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) u(a, a) = std::exp(-kI * (h.energies[a] * t));
  return Operator(std::move(u), true);
}

namespace {

double center_side_coupling(const SpinSystem& system) {
  return system.coupling(system.index_of("CC"), system.index_of("CS1"));
}

double center_side_gap_hz(const SpinSystem& system) {
  const auto cc = system.index_of("CC");
  const auto cs = system.index_of("CS1");
  return std::abs(system.larmor_rad_s(cc) - system.larmor_rad_s(cs)) / kTwoPi;
}

}  // namespace

int entangling_delay_turns(const SpinSystem& system) {
  const double j = center_side_coupling(system);
  if (!(j > 0.0)) throw std::invalid_argument("entangling delay: J(CC,CS) must be > 0");
  const double gap = center_side_gap_hz(system);
  if (!(gap > 0.0)) throw std::invalid_argument("entangling delay: CC and CS are degenerate");
  return std::max(1, static_cast<int>(std::lround(kPi / j * gap)));
}

double entangling_delay(const SpinSystem& system, CnotMode mode) {
  const double j = center_side_coupling(system);
  if (!(j > 0.0)) throw std::invalid_argument("entangling delay: J(CC,CS) must be > 0");
  if (mode == CnotMode::ideal) return kPi / j;
  return entangling_delay_turns(system) / center_side_gap_hz(system);
}

}  // namespace starsense
