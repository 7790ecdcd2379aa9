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

#include "starsense/acquisition.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "starsense/keyvalue.hpp"

namespace starsense {

void Fid::validate() const {
  if (samples.size() < 2) throw std::invalid_argument("FID needs at least 2 samples");
  if (!(dwell_s > 0.0)) throw std::invalid_argument("FID dwell must be > 0");
}

std::size_t Spectrum::nearest_bin(double omega) const {
  const auto it = std::lower_bound(freq_rad_s.begin(), freq_rad_s.end(), omega);
  if (it == freq_rad_s.begin()) return 0;
  if (it == freq_rad_s.end()) return freq_rad_s.size() - 1;
  const auto hi = static_cast<std::size_t>(it - freq_rad_s.begin());
  return (omega - freq_rad_s[hi - 1] <= freq_rad_s[hi] - omega) ? hi - 1 : hi;
}

std::size_t Spectrum::argmax() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  return best;
}

namespace {

// FFTW planning is not reentrant.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

void dft(std::vector<Complex>& data, int sign) {
  auto* io = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), io, io, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard lock(plan_mutex());
  fftw_destroy_plan(plan);
}

// Ascending bin j holds DFT index (j - N/2) mod N.
std::size_t dft_index(std::size_t j, std::size_t n) { return (j + n - n / 2) % n; }

}  // namespace

Spectrum spectrum(const Fid& fid, int zero_fill, std::optional<PpmAxis> axis) {
  fid.validate();
  if (zero_fill < 1) throw std::invalid_argument("zero fill factor must be >= 1");
  const std::size_t n = fid.size() * static_cast<std::size_t>(zero_fill);
  std::vector<Complex> buf(n, Complex{});
  std::copy(fid.samples.begin(), fid.samples.end(), buf.begin());
  dft(buf, FFTW_FORWARD);

  Spectrum s;
  s.source_points = fid.size();
  s.dwell_s = fid.dwell_s;
  s.start_time_s = fid.start_time_s;
  s.bins.resize(n);
  s.freq_rad_s.resize(n);
  const double dw = kTwoPi / (static_cast<double>(n) * fid.dwell_s);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (static_cast<double>(j) - static_cast<double>(n / 2)) * dw;
    s.freq_rad_s[j] = w;
    s.bins[j] = buf[dft_index(j, n)];
    if (fid.start_time_s != 0.0) s.bins[j] *= std::exp(-kI * (w * fid.start_time_s));
  }
  if (axis) {
    s.ppm.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.ppm[j] = axis->ppm(s.freq_rad_s[j]);
  }
  return s;
}

Fid inverse_spectrum(const Spectrum& spec) {
  const std::size_t n = spec.size();
  if (n < 2 || spec.source_points > n) throw std::invalid_argument("inverse_spectrum: malformed spectrum");
  std::vector<Complex> buf(n);
  for (std::size_t j = 0; j < n; ++j) {
    Complex b = spec.bins[j];
    if (spec.start_time_s != 0.0) b *= std::exp(kI * (spec.freq_rad_s[j] * spec.start_time_s));
    buf[dft_index(j, n)] = b;
  }
  dft(buf, FFTW_BACKWARD);
  Fid fid;
  fid.dwell_s = spec.dwell_s;
  fid.start_time_s = spec.start_time_s;
  fid.samples.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(spec.source_points));
  for (auto& x : fid.samples) x /= static_cast<double>(n);
  return fid;
}

std::string to_string(FieldSite site) { return site == FieldSite::center ? "center_field" : "side_field"; }

void SignalModelParams::validate() const {
  if (!(t2 > 0.0)) throw std::invalid_argument("signal model: T2 must be > 0");
}

Complex analytic_signal(const SignalModelParams& p, FieldSite site, double t) {
  const double envelope = std::isinf(p.t2) ? 0.25 : 0.25 * std::exp(-t / p.t2);
  const Complex lo = std::exp(-kI * (p.j * t));
  const Complex hi = std::exp(kI * (p.j * t));
  if (site == FieldSite::center) {
    return envelope * (lo + 2.0 + hi) * std::exp(kI * (p.omega0 * t + p.theta));
  }
  const Complex side = std::exp(kI * (2.0 * p.theta));
  return envelope * (lo * std::conj(side) + 2.0 + hi * side) * std::exp(kI * (p.omega0 * t));
}

Fid analytic_fid(const SignalModelParams& params, FieldSite site, std::size_t points, double dwell_s) {
  params.validate();
  Fid fid;
  fid.dwell_s = dwell_s;
  fid.samples.resize(points);
  for (std::size_t m = 0; m < points; ++m) {
    fid.samples[m] = analytic_signal(params, site, static_cast<double>(m) * dwell_s);
  }
  fid.validate();
  return fid;
}

namespace {

std::vector<Complex> window_sums(const Spectrum& spec, const std::vector<std::pair<std::size_t, std::size_t>>& windows) {
  std::vector<Complex> sums;
  for (const auto& [lo, hi] : windows) {
    Complex acc{};
    for (std::size_t k = lo; k < hi; ++k) acc += spec.bins[k];
    sums.push_back(acc / static_cast<double>(spec.size()));
  }
  return sums;
}

}  // namespace

std::vector<Peak> extract_peak_phases(const Spectrum& spec, std::span<const double> centers,
                                      double half_window, const PhaseReadoutOptions& options) {
  if (!(half_window > 0.0)) throw std::invalid_argument("peak window must be > 0");
  if (centers.empty()) return {};
  std::vector<double> sorted(centers.begin(), centers.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= 2.0 * half_window) {
      throw std::invalid_argument("peak windows overlap");
    }
  }
  // Half-open bin ranges [lo, hi) with |w - c| <= half_window.
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  for (double c : centers) {
    const auto& f = spec.freq_rad_s;
    const auto lo = std::lower_bound(f.begin(), f.end(), c - half_window) - f.begin();
    const auto hi = std::upper_bound(f.begin(), f.end(), c + half_window) - f.begin();
    if (hi <= lo) throw std::invalid_argument("empty peak window around " + std::to_string(c) + " rad/s");
    windows.emplace_back(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
  }

  std::vector<Complex> amps = window_sums(spec, windows);
  if (options.crosstalk_correction) {
    const std::size_t k = centers.size();
    const int zero_fill = static_cast<int>(spec.size() / spec.source_points);
    Eigen::MatrixXcd response(k, k);
    for (std::size_t l = 0; l < k; ++l) {
      Fid unit;
      unit.dwell_s = spec.dwell_s;
      unit.start_time_s = spec.start_time_s;
      unit.samples.resize(spec.source_points);
      for (std::size_t m = 0; m < spec.source_points; ++m) {
        const double t = unit.time(m);
        unit.samples[m] = std::exp(Complex(-options.calibration_decay_rate * t, centers[l] * t));
      }
      const auto col = window_sums(spectrum(unit, zero_fill), windows);
      for (std::size_t j = 0; j < k; ++j) response(j, l) = col[j];
    }
    Eigen::VectorXcd rhs = Eigen::Map<Eigen::VectorXcd>(amps.data(), static_cast<Eigen::Index>(k));
    Eigen::VectorXcd solved = response.partialPivLu().solve(rhs);
    for (std::size_t j = 0; j < k; ++j) amps[j] = solved(static_cast<Eigen::Index>(j));
  }

  std::vector<Peak> peaks;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    Peak p;
    p.center_rad_s = centers[j];
    p.center_ppm = spec.ppm.empty() ? 0.0 : spec.ppm[spec.nearest_bin(centers[j])];
    p.amplitude = amps[j];
    p.magnitude = std::abs(amps[j]);
    p.phase = wrap_phase(std::arg(amps[j]));
    peaks.push_back(p);
  }
  return peaks;
}

// ---------------------------------------------------------------------------
// Decay fits

namespace {

struct ShapeFit {
  double amplitude = 0.0;
  double residual2 = 0.0;
};

// Best amplitude for a fixed shape g(t) and the remaining squared residual.
template <class Shape>
ShapeFit fit_amplitude(std::span<const double> t, std::span<const double> y, Shape shape) {
  double gy = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double g = shape(t[i]);
    gy += g * y[i];
    gg += g * g;
  }
  ShapeFit fit;
  fit.amplitude = gg > 0.0 ? gy / gg : 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - fit.amplitude * shape(t[i]);
    fit.residual2 += r * r;
  }
  return fit;
}

// Grid scan then Brent refinement of a 1-D function on [lo, hi].
template <class F>
std::pair<double, double> minimize_1d(F f, double lo, double hi, int grid) {
  double best_x = lo, best_f = f(lo);
  const double step = (hi - lo) / grid;
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + step * i;
    const double v = f(x);
    if (v < best_f) best_f = v, best_x = x;
  }
  const double a = std::max(lo, best_x - step);
  const double b = std::min(hi, best_x + step);
  auto [x, v] = boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits / 2);
  if (v < best_f) return {x, v};
  return {best_x, best_f};
}

}  // namespace

DecayFit fit_decay(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay: times and amplitudes differ in length");
  if (t.size() < 4) throw std::invalid_argument("fit_decay: at least 4 points are required");
  double norm2 = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_decay: non-finite amplitude");
    norm2 += v * v;
  }
  if (norm2 == 0.0) throw std::invalid_argument("fit_decay: degenerate (all-zero) input");
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  const double span = *tmax - std::min(0.0, *tmin);
  if (!(span > 0.0)) throw std::invalid_argument("fit_decay: times must span a positive interval");

  // Time constants searched over [span / 1e4, span * 1e3] on a log scale.
  const double log_lo = std::log(span * 1e-4);
  const double log_hi = std::log(span * 1e3);

  auto exp_cost = [&](double log_t) {
    const double tc = std::exp(log_t);
    return fit_amplitude(t, y, [tc](double x) { return std::exp(-x / tc); }).residual2;
  };
  const auto [log_t, exp_res2] = minimize_1d(exp_cost, log_lo, log_hi, 240);

  DecayFit fit;
  fit.decay_time_s = std::exp(log_t);
  fit.rate = 1.0 / fit.decay_time_s;
  fit.amplitude = fit_amplitude(t, y, [&](double x) { return std::exp(-x / fit.decay_time_s); }).amplitude;
  fit.residual = std::sqrt(exp_res2);

  auto stretched_shape = [](double tc, double beta) {
    return [tc, beta](double x) { return std::exp(-std::pow(std::max(x, 0.0) / tc, beta)); };
  };
  auto best_time_for = [&](double beta) {
    return minimize_1d(
        [&](double lt) { return fit_amplitude(t, y, stretched_shape(std::exp(lt), beta)).residual2; },
        log_lo, log_hi, 120);
  };
  const auto [beta, str_res2] = minimize_1d([&](double b) { return best_time_for(b).second; }, 0.2, 5.0, 48);

  if (str_res2 < exp_res2) {
    fit.beta = beta;
    fit.stretched_time_s = std::exp(best_time_for(beta).first);
    fit.stretched_residual = std::sqrt(str_res2);
  } else {
    // The exponential is the beta = 1 member of the family.
    fit.beta = 1.0;
    fit.stretched_time_s = fit.decay_time_s;
    fit.stretched_residual = fit.residual;
  }
  fit.stretched_amplitude =
      fit_amplitude(t, y, stretched_shape(fit.stretched_time_s, fit.beta)).amplitude;

  const double floor = 1e-13 * std::sqrt(norm2);
  if (fit.residual <= floor) {
    fit.non_exponentiality = 1.0;
  } else {
    fit.non_exponentiality = fit.residual / std::max(fit.stretched_residual, floor);
  }
  fit.model = fit.non_exponentiality > kStretchedModelThreshold ? DecayFit::Model::stretched
                                                                : DecayFit::Model::exponential;
  return fit;
}

// ---------------------------------------------------------------------------
// FID acquisition

Complex cc_signal(const Matrix& rho, const SpinSystem& system) {
  const std::size_t cc = system.index_of("CC");
  const std::size_t m = spin_mask(system.size(), cc);
  if (static_cast<std::size_t>(rho.rows()) != system.dim()) {
    throw std::invalid_argument("cc_signal: state dimension does not match the register");
  }
  Complex s{};
  for (std::size_t x = 0; x < system.dim(); ++x) {
    if (!(x & m)) s += rho(static_cast<Eigen::Index>(x | m), static_cast<Eigen::Index>(x));
  }
  return 2.0 * s;
}

Fid acquire_fid(const std::vector<DensityMatrix>& trajectory, const SpinSystem& system, double dwell_s) {
  Fid fid;
  fid.dwell_s = dwell_s;
  for (const auto& rho : trajectory) fid.samples.push_back(cc_signal(rho.matrix(), system));
  fid.validate();
  return fid;
}

Fid acquire_fid(const Matrix& rho0, const SpinSystem& system, const DiagonalHamiltonian& h,
                const NoiseSpec& noise, std::size_t points, double dwell_s, double max_step_s,
                BlockMonitor* monitor) {
  const std::size_t n = system.size();
  const std::size_t dim = system.dim();
  const std::size_t cc = system.index_of("CC");
  if (h.dim() != dim || noise.rates.size() != n || static_cast<std::size_t>(rho0.rows()) != dim) {
    throw std::invalid_argument("acquire_fid: register, Hamiltonian and noise disagree");
  }
  if (points < 2 || !(dwell_s > 0.0) || !(max_step_s > 0.0)) {
    throw std::invalid_argument("acquire_fid: need >= 2 points and positive dwell/step");
  }
  double limit = max_step_s;
  if (noise.max_rate() > 0.0) limit = std::min(limit, kMaxRateStep / noise.max_rate());
  const auto sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dwell_s / limit - 1e-9)));
  const double dt = dwell_s / static_cast<double>(sub);

  const std::size_t mc = spin_mask(n, cc);
  std::vector<std::size_t> block;  // indices with the CC bit clear
  for (std::size_t x = 0; x < dim; ++x) {
    if (!(x & mc)) block.push_back(x);
  }
  std::vector<Complex> v(dim, Complex{});
  std::vector<Complex> half(dim, Complex{});
  for (std::size_t x : block) {
    v[x] = rho0(static_cast<Eigen::Index>(x | mc), static_cast<Eigen::Index>(x));
    // Half-step phase of element (x|mc, x), identical to the full-matrix path.
    const Complex dr = std::exp(-kI * (h.energies[x | mc] * dt / 2.0));
    const Complex dc = std::exp(-kI * (h.energies[x] * dt / 2.0));
    half[x] = dr * std::conj(dc);
  }
  const double cc_shrink = std::exp(-0.5 * noise.rates[cc] * dt);

  // Populations are only needed for the monitor; they evolve under the flip
  // channels alone.
  std::vector<double> pop;
  if (monitor) {
    pop.resize(dim);
    for (std::size_t x = 0; x < dim; ++x) pop[x] = rho0(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
  }
  std::size_t substeps_done = 0;
  auto check = [&] {
    ++monitor->checks;
    double total = 0.0, lowest = pop[0];
    for (double d : pop) total += d, lowest = std::min(lowest, d);
    double worst_minor = 0.0;
    for (std::size_t x : block) {
      worst_minor = std::max(worst_minor, std::norm(v[x]) - pop[x | mc] * pop[x]);
    }
    std::string why;
    if (std::abs(total - 1.0) > monitor->tolerance) why = "trace error " + std::to_string(total - 1.0);
    else if (lowest < monitor->floor) why = "population below floor: " + std::to_string(lowest);
    else if (worst_minor > monitor->tolerance) why = "coherence exceeds populations by " + std::to_string(worst_minor);
    if (!why.empty()) {
      if (monitor->violations == 0) monitor->first_violation = "acquisition substep " + std::to_string(substeps_done) + ": " + why;
      ++monitor->violations;
    }
  };

  auto sample = [&] {
    Complex s{};
    for (std::size_t x : block) s += v[x];
    return 2.0 * s;
  };

  Fid fid;
  fid.dwell_s = dwell_s;
  fid.samples.reserve(points);
  fid.samples.push_back(sample());
  for (std::size_t m = 1; m < points; ++m) {
    for (std::size_t step = 0; step < sub; ++step) {
      for (std::size_t x : block) v[x] *= half[x];
      for (std::size_t k = 0; k < n; ++k) {
        const double rate = noise.rates[k];
        if (rate == 0.0) continue;
        if (k == cc) {
          for (std::size_t x : block) v[x] *= cc_shrink;
          continue;
        }
        const std::size_t mk = spin_mask(n, k);
        const double p = -0.5 * std::expm1(-rate * dt);
        const double stay = 1.0 - p;
        for (std::size_t x : block) {
          if (x & mk) continue;
          const Complex a = v[x];
          const Complex b = v[x | mk];
          v[x] = stay * a + p * b;
          v[x | mk] = stay * b + p * a;
        }
        if (monitor) {
          for (std::size_t x = 0; x < dim; ++x) {
            if (x & mk) continue;
            const double a = pop[x];
            const double b = pop[x | mk];
            pop[x] = stay * a + p * b;
            pop[x | mk] = stay * b + p * a;
          }
        }
      }
      for (std::size_t x : block) v[x] *= half[x];
      ++substeps_done;
      if (monitor && monitor->every > 0 && substeps_done % monitor->every == 0) check();
    }
    fid.samples.push_back(sample());
  }
  return fid;
}

// ---------------------------------------------------------------------------
// CSV

void write_fid_csv(std::ostream& os, const Fid& fid) {
  os << "t_s,re,im\n";
  for (std::size_t m = 0; m < fid.size(); ++m) {
    const Complex z = fid.samples[m];
    os << format_quantity(fid.time(m)) << ',' << format_quantity(z.real()) << ','
       << format_quantity(z.imag()) << '\n';
  }
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
  os << "freq_rads,ppm,re,im,abs\n";
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const Complex z = spec.bins[j];
    os << format_quantity(spec.freq_rad_s[j]) << ','
       << (spec.ppm.empty() ? std::string() : format_quantity(spec.ppm[j])) << ','
       << format_quantity(z.real()) << ',' << format_quantity(z.imag()) << ','
       << format_quantity(std::abs(z)) << '\n';
  }
}

void write_peak_csv(std::ostream& os, std::span<const Peak> peaks) {
  os << "center_ppm,phase_deg,amplitude\n";
  for (const auto& p : peaks) {
    os << format_quantity(p.center_ppm) << ',' << format_quantity(rad_to_deg(p.phase)) << ','
       << format_quantity(p.magnitude) << '\n';
  }
}

}  // namespace starsense
