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

#include "starsense/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "starsense/gates.hpp"
#include "starsense/keyvalue.hpp"

namespace starsense {

void SampleSpec::validate() const {
  const double values[] = {impurity_concentration_mM, t1_cc_s, t2_full_s, t2_selective_s, t1_hss_s};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("sample " + name + ": constants must be positive");
    }
  }
}

SampleSpec SampleSpec::scaled_to(double concentration_mM) const {
  validate();
  if (!(concentration_mM > 0.0)) throw std::invalid_argument("concentration must be > 0");
  const double f = impurity_concentration_mM / concentration_mM;
  SampleSpec out = *this;
  out.impurity_concentration_mM = concentration_mM;
  out.t1_cc_s *= f;
  out.t2_full_s *= f;
  out.t2_selective_s *= f;
  out.t1_hss_s *= f;
  return out;
}

std::vector<SampleSpec> preset_samples() {
  return {
      {"sample1", 12.0, 1.3, 0.300, 0.030, 0.093},
      {"sample2", 26.0, 0.64, 0.100, 0.039, 0.043},
      {"sample3", 47.0, 0.36, 0.099, 0.038, 0.024},
      {"sample4", 94.0, 0.17, 0.064, 0.039, 0.017},
  };
}

SampleSpec preset_sample(int index) {
  const auto all = preset_samples();
  if (index < 1 || index > static_cast<int>(all.size())) {
    throw std::invalid_argument("sample preset must be 1..4");
  }
  return all[static_cast<std::size_t>(index - 1)];
}

SampleSpec parse_sample(std::string_view text, const std::string& source) {
  const auto doc = KeyValueDocument::parse(text, source);
  static const char* known[] = {"name", "impurity_concentration_mM", "t1_cc_s", "t2_full_s",
                                "t2_selective_s", "t1_hss_s"};
  for (const auto& e : doc.entries()) {
    if (std::find(std::begin(known), std::end(known), e.key) == std::end(known)) {
      doc.fail(e, "unknown key `" + e.key + "`");
    }
  }
  SampleSpec s;
  s.name = doc.string_or("name", "sample");
  s.impurity_concentration_mM = doc.number("impurity_concentration_mM");
  s.t1_cc_s = doc.number("t1_cc_s");
  s.t2_full_s = doc.number("t2_full_s");
  s.t2_selective_s = doc.number("t2_selective_s");
  s.t1_hss_s = doc.number("t1_hss_s");
  try {
    s.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(source, 0, ex.what());
  }
  return s;
}

SampleSpec load_sample(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_sample(buffer.str(), path.string());
}

std::string format_sample(const SampleSpec& s) {
  std::ostringstream out;
  out << "name = " << s.name << "\n"
      << "impurity_concentration_mM = " << format_quantity(s.impurity_concentration_mM) << "\n"
      << "t1_cc_s = " << format_quantity(s.t1_cc_s) << "\n"
      << "t2_full_s = " << format_quantity(s.t2_full_s) << "\n"
      << "t2_selective_s = " << format_quantity(s.t2_selective_s) << "\n"
      << "t1_hss_s = " << format_quantity(s.t1_hss_s) << "\n";
  return out.str();
}

std::string to_string(DecouplingMode mode) {
  switch (mode) {
    case DecouplingMode::none: return "none";
    case DecouplingMode::selective: return "selective";
    case DecouplingMode::full: return "full";
  }
  return "?";
}

DecouplingMode parse_decoupling_mode(std::string_view text) {
  if (text == "none") return DecouplingMode::none;
  if (text == "selective") return DecouplingMode::selective;
  if (text == "full") return DecouplingMode::full;
  throw std::invalid_argument("unknown decoupling mode `" + std::string(text) + "`");
}

std::vector<std::string> decoupled_spins(const SpinSystem& system, DecouplingMode mode) {
  std::vector<std::string> out;
  for (const auto& s : system.spins()) {
    const bool hc = s.role == SpinRole::center_proton;
    const bool hs = s.role == SpinRole::side_proton;
    if ((mode == DecouplingMode::selective && hc) || (mode == DecouplingMode::full && (hc || hs))) {
      out.push_back(s.name);
    }
  }
  return out;
}

SpinSystem apply_decoupling(const SpinSystem& system, DecouplingMode mode) {
  return system.without(decoupled_spins(system, mode));
}

double NoiseSpec::max_rate() const {
  double m = 0.0;
  for (double r : rates) m = std::max(m, r);
  return m;
}

namespace {

NoiseSpec rates_by_role(const SpinSystem& system, double carbon, double proton, DecouplingMode mode) {
  NoiseSpec spec;
  spec.decoupling = mode;
  for (const auto& s : system.spins()) {
    switch (s.role) {
      case SpinRole::center:
      case SpinRole::side: spec.rates.push_back(carbon); break;
      case SpinRole::center_proton:
      case SpinRole::side_proton: spec.rates.push_back(proton); break;
      case SpinRole::other: spec.rates.push_back(0.0); break;
    }
  }
  return spec;
}

}  // namespace

NoiseSpec calibrate_rates(const SampleSpec& sample, const SpinSystem& system, DecouplingMode mode) {
  sample.validate();
  return rates_by_role(system, 1.0 / sample.t1_cc_s, 1.0 / sample.t1_hss_s, mode);
}

Relaxivity relaxivity_from(const SampleSpec& reference) {
  reference.validate();
  return {1.0 / (reference.t1_cc_s * reference.impurity_concentration_mM),
          1.0 / (reference.t1_hss_s * reference.impurity_concentration_mM)};
}

NoiseSpec rates_from_relaxivity(const Relaxivity& relaxivity, double concentration_mM,
                                const SpinSystem& system, DecouplingMode mode) {
  if (!(concentration_mM >= 0.0)) throw std::invalid_argument("concentration must be >= 0");
  return rates_by_role(system, relaxivity.carbon * concentration_mM,
                       relaxivity.proton * concentration_mM, mode);
}

std::array<Matrix2, 4> LindbladChannel::kraus(double dt) const {
  const double gamma = -std::expm1(-rate * dt);  // 1 - e^{-rate dt}
  const double h = std::sqrt(0.5);
  const double keep = std::sqrt(1.0 - gamma);
  const double jump = std::sqrt(gamma);
  std::array<Matrix2, 4> k;
  // Equal mixture of relaxation toward |0> (sigma_+) and toward |1> (sigma_-).
  k[0] << h, 0, 0, h * keep;
  k[1] << 0, h * jump, 0, 0;
  k[2] << h * keep, 0, 0, h;
  k[3] << 0, 0, h * jump, 0;
  return k;
}

std::array<Matrix2, 2> LindbladChannel::jump_operators() const {
  const double a = std::sqrt(rate / 2.0);
  std::array<Matrix2, 2> l;
  l[0] << 0, a, 0, 0;  // sigma_+ = |0><1|
  l[1] << 0, 0, a, 0;  // sigma_- = |1><0|
  return l;
}

void apply_flip_channel(Matrix& rho, std::size_t n_spins, std::size_t spin, double rate, double dt) {
  if (rate == 0.0) return;
  const auto dim = static_cast<std::size_t>(rho.rows());
  const std::size_t m = spin_mask(n_spins, spin);
  const double p = -0.5 * std::expm1(-rate * dt);
  const double stay = 1.0 - p;
  const double shrink = std::exp(-0.5 * rate * dt);
  for (std::size_t c = 0; c < dim; ++c) {
    if (c & m) continue;
    Complex* c0 = rho.data() + c * dim;
    Complex* c1 = rho.data() + (c | m) * dim;
    for (std::size_t r = 0; r < dim; ++r) {
      if (r & m) continue;
      const Complex a = c0[r];          // (r, c)
      const Complex b = c1[r | m];      // (r|m, c|m)
      c0[r] = stay * a + p * b;
      c1[r | m] = stay * b + p * a;
      c1[r] *= shrink;                  // (r, c|m)
      c0[r | m] *= shrink;              // (r|m, c)
    }
  }
}

Evolver::Evolver(const DiagonalHamiltonian& h, const NoiseSpec& noise, double dt)
    : dt_(dt), n_spins_(0), rates_(noise.rates) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be > 0");
  while ((std::size_t{1} << n_spins_) < h.dim()) ++n_spins_;
  if ((std::size_t{1} << n_spins_) != h.dim() || rates_.size() != n_spins_) {
    throw std::invalid_argument("evolve: Hamiltonian and noise dimensions disagree");
  }
  for (double r : rates_) {
    if (!(r >= 0.0)) throw std::invalid_argument("evolve: rates must be >= 0");
  }
  if (dt * noise.max_rate() > kMaxRateStep) {
    throw std::invalid_argument("evolve: step-size guard violated (dt * max rate = " +
                                std::to_string(dt * noise.max_rate()) + " > 0.05)");
  }
  half_phase_.resize(h.dim());
  for (std::size_t a = 0; a < h.dim(); ++a) half_phase_[a] = std::exp(-kI * (h.energies[a] * dt / 2.0));
}

void Evolver::step(Matrix& rho) const {
  if (static_cast<std::size_t>(rho.rows()) != dim()) {
    throw std::invalid_argument("evolve: state dimension mismatch");
  }
  apply_diagonal_unitary(rho, half_phase_);
  for (std::size_t s = 0; s < n_spins_; ++s) apply_flip_channel(rho, n_spins_, s, rates_[s], dt_);
  apply_diagonal_unitary(rho, half_phase_);
}

std::vector<DensityMatrix> evolve(const DensityMatrix& rho, const DiagonalHamiltonian& h,
                                  const NoiseSpec& noise, double dt, std::size_t steps) {
  const Evolver evolver(h, noise, dt);
  std::vector<DensityMatrix> out;
  out.reserve(steps + 1);
  out.push_back(rho);
  Matrix state = rho.matrix();
  for (std::size_t k = 0; k < steps; ++k) {
    evolver.step(state);
    out.emplace_back(state);
  }
  return out;
}

void propagate(Matrix& rho, const DiagonalHamiltonian& h, const NoiseSpec& noise, double duration,
               double max_dt, const StepObserver& observer) {
  if (!(duration >= 0.0)) throw std::invalid_argument("propagate: negative duration");
  if (!(max_dt > 0.0)) throw std::invalid_argument("propagate: max_dt must be > 0");
  if (duration == 0.0) return;
  double limit = max_dt;
  if (noise.max_rate() > 0.0) limit = std::min(limit, kMaxRateStep / noise.max_rate());
  const auto steps = static_cast<std::size_t>(std::ceil(duration / limit - 1e-9));
  const Evolver evolver(h, noise, duration / static_cast<double>(std::max<std::size_t>(steps, 1)));
  for (std::size_t k = 0; k < std::max<std::size_t>(steps, 1); ++k) {
    evolver.step(rho);
    if (observer) observer(rho, k);
  }
}

}  // namespace starsense
