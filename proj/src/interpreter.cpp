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

#include <algorithm>
#include <map>
#include <stdexcept>

#include "starsense/experiments.hpp"

namespace starsense {

std::string to_string(InitialState s) {
  switch (s) {
    case InitialState::observable_equivalent: return "observable_equivalent";
    case InitialState::thermal: return "thermal";
    case InitialState::rho_i: return "rho_i";
  }
  return "?";
}

InitialState parse_initial_state(std::string_view text) {
  for (auto s : {InitialState::observable_equivalent, InitialState::thermal, InitialState::rho_i}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown initial state '" + std::string(text) +
                              "' (expected observable_equivalent, thermal or rho_i)");
}

Matrix initial_state(InitialState kind, const SpinSystem& system) {
  switch (kind) {
    case InitialState::observable_equivalent: return thermal_state(system).observable_equivalent.matrix();
    case InitialState::thermal: return thermal_state(system).state.matrix();
    case InitialState::rho_i: return prepare_rho_i(system).matrix();
  }
  throw std::invalid_argument("initial_state: bad kind");
}

void ValidityReport::merge(const ValidityReport& other) {
  full_checks += other.full_checks;
  block_checks += other.block_checks;
  if (violations == 0 && other.violations > 0) first_violation = other.first_violation;
  violations += other.violations;
  worst_hermiticity = std::max(worst_hermiticity, other.worst_hermiticity);
  worst_trace = std::max(worst_trace, other.worst_trace);
}

namespace {

void visit_timeline(const std::vector<Event>& events, DecouplingMode& current, DecouplingMode& least) {
  for (const auto& e : events) {
    if (const auto* d = std::get_if<DecoupleEvent>(&e.kind)) current = d->mode;
    if (const auto* r = std::get_if<RepeatEvent>(&e.kind)) visit_timeline(r->body, current, least);
    const auto* delay = std::get_if<DelayEvent>(&e.kind);
    if ((delay && delay->ms > 0.0) || std::holds_alternative<AcquireEvent>(e.kind)) {
      least = std::min(least, current);
    }
  }
}

}  // namespace

SpinSystem program_register(const SpinSystem& molecule, const PulseProgram& program,
                            DecouplingMode initial_mode) {
  DecouplingMode current = initial_mode;
  DecouplingMode least = DecouplingMode::full;
  visit_timeline(program.events, current, least);
  return apply_decoupling(molecule, least);
}

namespace {

class Machine {
 public:
  Machine(const SpinSystem& system, const NoiseSpec& noise, const InterpreterOptions& options)
      : system_(system), noise_(noise), options_(options), mode_(options.initial_mode) {
    if (noise.rates.size() != system.size()) {
      throw std::invalid_argument("execute: noise rates do not match the register");
    }
    frame_ = options.frame == CnotMode::ideal ? resonance_frame(system) : carrier_frame(system, "CC");
    cc_ = system.index_of("CC");
    cs_ = system.indices_with_role(SpinRole::side);
  }

  ProgramRun run(const PulseProgram& program, Matrix rho) {
    if (static_cast<std::size_t>(rho.rows()) != system_.dim() || rho.cols() != rho.rows()) {
      throw std::invalid_argument("execute: initial state does not match the register");
    }
    check(rho, "initial state");
    ProgramRun out{system_, {}, {}, {}, program.duration_s(), 0};
    walk(program.events, rho, out);
    if (!acquired_) throw std::invalid_argument("execute: program has no acquire");
    out.validity.merge(report_);
    out.steps = steps_;
    return out;
  }

 private:
  const DiagonalHamiltonian& hamiltonian(DecouplingMode mode) {
    auto it = cache_.find(mode);
    if (it == cache_.end()) {
      const SpinSystem coupled = system_.with_couplings_zeroed(decoupled_spins(system_, mode));
      it = cache_.emplace(mode, build_hamiltonian(coupled, frame_)).first;
    }
    return it->second;
  }

  std::vector<std::size_t> targets(PulseTarget t) const {
    std::vector<std::size_t> out;
    if (t != PulseTarget::cs) out.push_back(cc_);
    if (t != PulseTarget::cc) out.insert(out.end(), cs_.begin(), cs_.end());
    return out;
  }

  void check(const Matrix& rho, const std::string& where) {
    const StateCheck c = check_state(rho, options_.eigenvalue_floor);
    ++report_.full_checks;
    report_.worst_hermiticity = std::max(report_.worst_hermiticity, c.hermiticity_error);
    report_.worst_trace = std::max(report_.worst_trace, c.trace_error);
    if (!c.ok(options_.validity_tolerance)) {
      if (report_.violations == 0) {
        report_.first_violation = where + ": hermiticity " + std::to_string(c.hermiticity_error) +
                                  ", trace " + std::to_string(c.trace_error) +
                                  (c.eigenvalue_floor_ok ? "" : ", eigenvalue below floor");
      }
      ++report_.violations;
    }
  }

  void walk(const std::vector<Event>& events, Matrix& rho, ProgramRun& out) {
    const std::size_t n = system_.size();
    for (const auto& e : events) {
      if (const auto* p = std::get_if<PulseEvent>(&e.kind)) {
        const Matrix2 u = rotation_matrix(p->phi(), p->theta());
        for (auto k : targets(p->target)) apply_local_unitary(rho, n, k, u);
      } else if (const auto* z = std::get_if<VirtualZEvent>(&e.kind)) {
        const Matrix2 u = z_rotation_matrix(z->theta());
        for (auto k : targets(z->target)) apply_local_unitary(rho, n, k, u);
      } else if (const auto* d = std::get_if<DelayEvent>(&e.kind)) {
        const std::string where = "line " + std::to_string(e.span.line) + " delay";
        propagate(rho, hamiltonian(mode_), noise_, d->seconds(), options_.max_step_s,
                  [&](const Matrix& state, std::size_t) {
                    ++steps_;
                    if (options_.check_every > 0 && steps_ % options_.check_every == 0) check(state, where);
                  });
      } else if (const auto* m = std::get_if<DecoupleEvent>(&e.kind)) {
        mode_ = m->mode;
      } else if (const auto* r = std::get_if<RepeatEvent>(&e.kind)) {
        for (int k = 0; k < r->count; ++k) walk(r->body, rho, out);
      } else if (const auto* a = std::get_if<AcquireEvent>(&e.kind)) {
        if (acquired_) throw std::invalid_argument("execute: more than one acquire");
        acquired_ = true;
        check(rho, "before acquisition");
        out.state_before_acquire = rho;
        FrameOffsets acq_frame = frame_;
        acq_frame[cc_] -= options_.display_offset_rad_s;
        const SpinSystem coupled = system_.with_couplings_zeroed(decoupled_spins(system_, mode_));
        const DiagonalHamiltonian h = build_hamiltonian(coupled, acq_frame);
        BlockMonitor monitor;
        monitor.every = options_.check_every;
        monitor.floor = options_.eigenvalue_floor;
        monitor.tolerance = options_.validity_tolerance;
        out.fid = acquire_fid(rho, system_, h, noise_, static_cast<std::size_t>(a->points), a->dwell_s(),
                              options_.max_step_s, options_.check_every > 0 ? &monitor : nullptr);
        report_.block_checks += monitor.checks;
        if (monitor.violations > 0) {
          if (report_.violations == 0) report_.first_violation = monitor.first_violation;
          report_.violations += monitor.violations;
        }
      }
    }
  }

  const SpinSystem& system_;
  const NoiseSpec& noise_;
  InterpreterOptions options_;
  DecouplingMode mode_;
  FrameOffsets frame_;
  std::size_t cc_ = 0;
  std::vector<std::size_t> cs_;
  std::map<DecouplingMode, DiagonalHamiltonian> cache_;
  ValidityReport report_;
  std::size_t steps_ = 0;
  bool acquired_ = false;
};

}  // namespace

ProgramRun execute(const PulseProgram& program, const SpinSystem& system, const NoiseSpec& noise, Matrix rho0,
                   const InterpreterOptions& options) {
  return Machine(system, noise, options).run(program, std::move(rho0));
}

ProgramRun run_program(const PulseProgram& program, const SpinSystem& molecule, const SampleSpec& sample,
                       InitialState init, const InterpreterOptions& options) {
  const SpinSystem reg = program_register(molecule, program, options.initial_mode);
  const NoiseSpec noise = calibrate_rates(sample, reg);
  return execute(program, reg, noise, initial_state(init, reg), options);
}

std::vector<double> triplet_centers(const SpinSystem& system, double display_offset_rad_s) {
  const auto sides = system.indices_with_role(SpinRole::side);
  if (sides.empty()) throw std::invalid_argument("triplet_centers: register has no side spin");
  const double j = system.coupling(system.index_of("CC"), sides.front());
  return {display_offset_rad_s + j, display_offset_rad_s, display_offset_rad_s - j};
}

PpmAxis cc_ppm_axis(const SpinSystem& system, double display_offset_rad_s) {
  const Spin& cc = system.spin(system.index_of("CC"));
  return PpmAxis{system.reference_frequency_hz(cc.species), cc.shift_ppm, display_offset_rad_s};
}

}  // namespace starsense
