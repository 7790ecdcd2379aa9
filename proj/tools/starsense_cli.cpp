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

// Command-line front end: experiment families and DSL program runs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "starsense/experiments.hpp"

using namespace starsense;

namespace {

struct Flags {
  std::string config;
  std::string output_dir;
  std::vector<double> thetas;
  std::string sample;
  std::string decoupling;
  std::string molecule;
  std::string cnot;
  std::vector<int> cycles;
  double tau_ms = 0.0;
  int points = 0;
  double dwell_ms = 0.0;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "Experiment config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", f.output_dir, "Output directory");
  cmd->add_option("--theta", f.thetas, "Theta values in degrees")->delimiter(',');
  cmd->add_option("--sample", f.sample, "Sample preset (sample1..sample4) or sample file");
  cmd->add_option("--decoupling", f.decoupling, "none | selective | full");
  cmd->add_option("--molecule", f.molecule, "Molecule definition file")->check(CLI::ExistingFile);
  cmd->add_option("--cnot", f.cnot, "ideal | quantized");
  cmd->add_option("--cycles", f.cycles, "Cycle counts n (tau = tau_unit * n)")->delimiter(',');
  cmd->add_option("--tau", f.tau_ms, "Sensing time in ms");
  cmd->add_option("--points", f.points, "Acquisition points");
  cmd->add_option("--dwell", f.dwell_ms, "Dwell time in ms");
  cmd->add_option("-j,--jobs", f.jobs, "Worker threads for sweeps");
}

ExperimentConfig build_config(const Flags& f, ExperimentConfig c) {
  if (!f.config.empty()) c = load_experiment_config(f.config);
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (!f.thetas.empty()) c.thetas_deg = f.thetas;
  if (!f.sample.empty()) c.sample = f.sample;
  if (!f.decoupling.empty()) c.decoupling = parse_decoupling_mode(f.decoupling);
  if (!f.molecule.empty()) c.molecule_path = f.molecule;
  if (!f.cnot.empty()) {
    if (f.cnot != "ideal" && f.cnot != "quantized") throw ConfigError("--cnot must be ideal or quantized");
    c.cnot = f.cnot == "ideal" ? CnotMode::ideal : CnotMode::quantized;
  }
  if (!f.cycles.empty()) c.cycles = f.cycles;
  if (f.tau_ms > 0.0) c.tau_ms = f.tau_ms;
  if (f.points > 0) c.acquire_points = f.points;
  if (f.dwell_ms > 0.0) c.dwell_ms = f.dwell_ms;
  if (f.jobs > 0) c.jobs = f.jobs;
  c.validate();
  return c;
}

void report_validity(const ValidityReport& v) {
  std::cout << "state checks: " << v.full_checks << " dense, " << v.block_checks << " acquisition block, "
            << v.violations << " violations\n";
  if (!v.ok()) std::cerr << "first violation: " << v.first_violation << '\n';
}

void print_peaks(const std::vector<PeakRecord>& peaks) {
  std::printf("%-14s %8s %5s %10s %10s %10s\n", "sequence", "theta", "line", "ppm", "phase", "expected");
  for (const auto& p : peaks) {
    std::printf("%-14s %8.2f %5d %10.4f %10.3f %10.3f\n", p.sequence.c_str(), p.theta_deg, p.line, p.center_ppm,
                p.phase_deg, p.expected_deg);
  }
}

// Diagnostics in file:line:col form followed by the offending line and a caret.
void print_diagnostics(const std::string& name, const std::string& text, const std::vector<ParseDiagnostic>& diags) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  for (const auto& d : diags) {
    std::cerr << d.format(name) << '\n';
    const auto idx = static_cast<std::size_t>(d.span.line - 1);
    if (idx < lines.size()) {
      std::cerr << "  " << lines[idx] << "\n  " << std::string(static_cast<std::size_t>(d.span.column - 1), ' ')
                << std::string(std::max<std::size_t>(1, d.span.length), '^') << '\n';
    }
  }
}

int run_dsl(const std::string& path, const Flags& f, bool check_only) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const ParseResult parsed = parse_pulse_program(text);
  if (!parsed.ok()) {
    print_diagnostics(path, text, parsed.diagnostics);
    return 2;
  }
  if (check_only) {
    std::cout << print_pulse_program(*parsed.program);
    return 0;
  }
  ExperimentConfig c = build_config(f, ExperimentConfig{});
  const SpinSystem mol = c.molecule();
  const ProgramRun run = run_program(*parsed.program, mol, c.sample_spec(), c.initial, c.interpreter_options());
  const double offset = InterpreterOptions{}.display_offset_rad_s;
  const Spectrum spec = spectrum(run.fid, c.zero_fill, cc_ppm_axis(mol, offset));
  const auto sides = mol.indices_with_role(SpinRole::side);
  const double j = mol.coupling(mol.index_of("CC"), sides.at(0));
  const auto peaks = extract_peak_phases(spec, triplet_centers(mol, offset), j / 4.0);

  const auto dir = c.output_dir / "run";
  std::filesystem::create_directories(dir);
  std::ofstream fid_out(dir / "fid.csv"), spec_out(dir / "spectrum.csv"), peak_out(dir / "peaks.csv");
  write_fid_csv(fid_out, run.fid);
  write_spectrum_csv(spec_out, spec);
  write_peak_csv(peak_out, peaks);
  std::cout << "register: " << run.register_system.size() << " spins, program duration "
            << run.duration_s * 1e3 << " ms\n";
  for (const auto& p : peaks) {
    std::printf("line %.4f ppm  phase %8.3f deg  amplitude %.6f\n", p.center_ppm, rad_to_deg(p.phase), p.magnitude);
  }
  report_validity(run.validity);
  std::cout << "wrote " << dir.string() << '\n';
  return run.validity.ok() ? 0 : 3;
}

// Builtin sequence as program text. Theta, tau, cycles and decoupling map to
// the sensing window; the molecule and CNOT mode set the entangling delay.
int emit_builtin(const std::string& name, const Flags& f) {
  const BuiltinSequence seq = parse_builtin_sequence(name);
  const ExperimentConfig c = build_config(f, ExperimentConfig{});
  SequenceParams p = SequenceParams::for_system(c.molecule(), c.cnot);
  p.theta_deg = f.thetas.empty() ? 0.0 : f.thetas.front();
  p.n_cycles = f.cycles.empty() ? 1 : f.cycles.front();
  p.tau_ms = c.tau_ms;
  if (seq == BuiltinSequence::xy8_sense && f.tau_ms <= 0.0) p.tau_ms = c.tau_unit_ms / 8.0;
  if (!f.decoupling.empty()) p.sensing_mode = c.decoupling;
  p.acquire_points = c.acquire_points;
  p.dwell_ms = c.dwell_ms;
  std::cout << "# " << name << ", theta " << p.theta_deg << " deg\n"
            << print_pulse_program(builtin_sequence(seq, p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"starsense: star-topology NMR entangled-sensor simulator"};
  app.require_subcommand(1);
  Flags f;

  auto* theory = app.add_subcommand("spectrum-theory", "Closed-form triplet spectra over a theta list");
  auto* sweep = app.add_subcommand("phase-sweep", "Simulated phase readout, field on CC and on CS");
  auto* decay = app.add_subcommand("noise-decay", "Amplitude vs sensing time: full, selective, selective + XY-8");
  auto* appendix = app.add_subcommand("fid-appendix", "FIDs from rho_i for the four samples");
  auto* run = app.add_subcommand("run", "Execute a pulse-program file");
  auto* check = app.add_subcommand("check", "Parse a pulse-program file and print it back");
  auto* emit = app.add_subcommand("emit", "Print a builtin sequence (field_on_cc, field_on_cs, xy8_sense)");
  double jt2 = 0.0;
  for (auto* cmd : {theory, sweep, decay, appendix, run, emit}) add_common(cmd, f);
  theory->add_option("--jt2", jt2, "Product J * T2 of the model signals");
  std::string program;
  run->add_option("program", program, "Pulse-program file")->required();
  check->add_option("program", program, "Pulse-program file")->required();
  std::string sequence;
  emit->add_option("sequence", sequence, "Builtin sequence name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*emit) return emit_builtin(sequence, f);
    if (*run) return run_dsl(program, f, false);
    if (*check) return run_dsl(program, f, true);
    if (*theory) {
      ExperimentConfig c = build_config(f, {});
      if (jt2 > 0.0) c.jt2 = jt2;
      print_peaks(run_spectrum_theory(c).peaks);
    } else if (*sweep) {
      const auto r = run_phase_sweep(build_config(f, {}));
      print_peaks(r.peaks);
      report_validity(r.validity);
      if (!r.validity.ok()) return 3;
    } else if (*decay) {
      const auto r = run_noise_decay(build_config(f, {}));
      for (const auto& c : r.curves) {
        std::printf("%-14s T = %8.2f ms  residual %.3e  non-exponentiality %.3f  (%s)\n", c.label.c_str(),
                    c.fit.decay_time_s * 1e3, c.fit.residual, c.fit.non_exponentiality,
                    c.fit.model == DecayFit::Model::exponential ? "exponential" : "stretched");
      }
      report_validity(r.validity);
      if (!r.validity.ok()) return 3;
    } else if (*appendix) {
      ExperimentConfig defaults;
      defaults.acquire_points = 2048;
      defaults.dwell_ms = 0.5;
      const auto r = run_fid_appendix(build_config(f, defaults));
      for (const auto& t : r.traces) {
        std::printf("%-8s %-9s T = %9.2f ms  non-exponentiality %.3f\n", t.sample.c_str(),
                    to_string(t.mode).c_str(), t.fit.decay_time_s * 1e3, t.fit.non_exponentiality);
      }
      report_validity(r.validity);
      if (!r.validity.ok()) return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
