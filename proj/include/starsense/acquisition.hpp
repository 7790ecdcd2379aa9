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

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "starsense/hamiltonian.hpp"
#include "starsense/noise.hpp"
#include "starsense/spin_system.hpp"
#include "starsense/state.hpp"

namespace starsense {

struct Fid {
  std::vector<Complex> samples;
  double dwell_s = 0.0;
  double start_time_s = 0.0;

  void validate() const;  // >= 2 samples, dwell > 0
  std::size_t size() const { return samples.size(); }
  double time(std::size_t m) const { return start_time_s + static_cast<double>(m) * dwell_s; }
};

// Maps an offset frequency (rad/s, as seen in the acquisition frame) to ppm.
struct PpmAxis {
  double reference_hz = 0.0;     // spectrometer frequency of the species
  double ppm_at_origin = 0.0;    // shift that sits at `origin_rad_s`
  double origin_rad_s = 0.0;

  double ppm(double omega) const {
    return ppm_at_origin + (omega - origin_rad_s) / (kTwoPi * reference_hz) * 1e6;
  }
  double omega(double ppm_value) const {
    return origin_rad_s + (ppm_value - ppm_at_origin) * 1e-6 * kTwoPi * reference_hz;
  }
};

struct Peak {
  double center_rad_s = 0.0;
  double center_ppm = 0.0;
  Complex amplitude;
  double phase = 0.0;  // (-pi, pi]
  double magnitude = 0.0;
};

// Unnormalised DFT sum_m x_m e^{-i omega_k t_m} of the zero-filled FID, bins in
// ascending frequency.
struct Spectrum {
  std::vector<Complex> bins;
  std::vector<double> freq_rad_s;
  std::vector<double> ppm;  // empty without a ppm axis
  std::size_t source_points = 0;
  double dwell_s = 0.0;
  double start_time_s = 0.0;
  std::vector<Peak> peaks;

  std::size_t size() const { return bins.size(); }
  double bin_width_rad_s() const { return kTwoPi / (static_cast<double>(bins.size()) * dwell_s); }
  std::size_t nearest_bin(double omega) const;
  std::size_t argmax() const;
};

Spectrum spectrum(const Fid& fid, int zero_fill = 2, std::optional<PpmAxis> axis = std::nullopt);
// First `source_points` samples of the inverse transform.
Fid inverse_spectrum(const Spectrum& spec);

// Closed-form signals in the quadrature convention (carrier e^{+i omega0 t}):
//   center_field: 1/4 e^{-t/T2} (e^{-iJt} + 2 + e^{iJt}) e^{i(omega0 t + theta)}
//   side_field:   1/4 e^{-t/T2} (e^{-iJt - 2i theta} + 2 + e^{iJt + 2i theta}) e^{i omega0 t}
// At t = 0 the real parts are cos(theta) and cos^2(theta).
enum class FieldSite { center, side };

std::string to_string(FieldSite site);

struct SignalModelParams {
  double theta = 0.0;  // rad
  double j = 0.0;      // rad/s
  double omega0 = 0.0; // rad/s
  double t2 = std::numeric_limits<double>::infinity();

  void validate() const;  // t2 > 0
  // theta accumulated by a field b (T) over tau (s) at gyromagnetic ratio
  // gamma (rad/s/T).
  static double phase_from_field(double gamma, double b, double tau) { return gamma * b * tau; }
};

Complex analytic_signal(const SignalModelParams& params, FieldSite site, double t);
Fid analytic_fid(const SignalModelParams& params, FieldSite site, std::size_t points, double dwell_s);

struct PhaseReadoutOptions {
  // Unmix the window integrals of neighbouring peaks with the response of
  // unit lines at the expected centers. Without it the result is the bare
  // arg of each window sum.
  bool crosstalk_correction = true;
  // Decay rate (1/s) assumed for the unit lines of the correction.
  double calibration_decay_rate = 0.0;
};

// Per-window complex integral (normalised by the transform length, so a unit
// line has amplitude ~1). Windows are [c - half_window, c + half_window] and
// must be disjoint and non-empty.
std::vector<Peak> extract_peak_phases(const Spectrum& spec, std::span<const double> centers_rad_s,
                                      double half_window_rad_s, const PhaseReadoutOptions& options = {});

struct DecayFit {
  enum class Model { exponential, stretched };
  Model model = Model::exponential;
  // A e^{-t/T}
  double amplitude = 0.0;
  double decay_time_s = 0.0;
  double rate = 0.0;
  double residual = 0.0;  // 2-norm
  // A' e^{-(t/T')^beta}
  double stretched_amplitude = 0.0;
  double stretched_time_s = 0.0;
  double beta = 1.0;
  double stretched_residual = 0.0;
  // residual / stretched_residual, >= 1.
  double non_exponentiality = 1.0;
};

// Score above which the stretched model is reported.
inline constexpr double kStretchedModelThreshold = 1.5;

DecayFit fit_decay(std::span<const double> times_s, std::span<const double> amplitudes);

// S = Tr[(sx + i sy)_CC rho] = 2 sum_x rho[(1,x),(0,x)].
Complex cc_signal(const Matrix& rho, const SpinSystem& system);

Fid acquire_fid(const std::vector<DensityMatrix>& trajectory, const SpinSystem& system, double dwell_s);

// Spot checks for the block propagation: every `every` substeps the tracked
// populations must sum to one and stay above `floor`, and each 2x2 principal
// minor pairing a CC coherence with its two populations must be positive.
struct BlockMonitor {
  std::size_t every = 10;
  double floor = -1e-9;
  double tolerance = 1e-10;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::string first_violation;
};

// Propagates only the CC single-quantum block of rho0 between samples; the
// block is closed under the diagonal Hamiltonian and the flip channels, and
// the arithmetic matches `propagate` step for step.
Fid acquire_fid(const Matrix& rho0, const SpinSystem& system, const DiagonalHamiltonian& h,
                const NoiseSpec& noise, std::size_t points, double dwell_s, double max_step_s = 1e-4,
                BlockMonitor* monitor = nullptr);

void write_fid_csv(std::ostream& os, const Fid& fid);
void write_spectrum_csv(std::ostream& os, const Spectrum& spec);
void write_peak_csv(std::ostream& os, std::span<const Peak> peaks);

}  // namespace starsense
