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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracle.hpp"
#include "starsense/experiments.hpp"

using namespace starsense;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("starsense_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(STARSENSE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

PulseProgram parse_ok(std::string_view text) {
  ParseResult r = parse_pulse_program(text);
  REQUIRE(r.ok());
  return *r.program;
}

}  // namespace

TEST_CASE("experiment config parsing") {
  const ExperimentConfig c = parse_experiment_config(
      "sample = sample3\nthetas_deg = 10, 20\ncycles = 1 2 4\ncnot = quantized\ninitial_state = rho_i\n"
      "decoupling = selective\njobs = 2\n");
  CHECK(c.sample == "sample3");
  CHECK(c.thetas_deg == std::vector<double>{10.0, 20.0});
  CHECK(c.cycles == std::vector<int>{1, 2, 4});
  CHECK(c.cnot == CnotMode::quantized);
  CHECK(c.initial == InitialState::rho_i);
  CHECK(c.decoupling == DecouplingMode::selective);
  CHECK(c.sample_spec().t1_cc_s == doctest::Approx(0.36));
  CHECK(c.interpreter_options().frame == CnotMode::quantized);

  CHECK_THROWS_AS(parse_experiment_config("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("cycles = 1, 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("cnot = fuzzy\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("dwell_ms = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("thetas_deg = 1, x\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("acquire_points = 1\n"), ConfigError);
}

TEST_CASE("relative paths resolve against the config file") {
  const fs::path conf = fs::path(STARSENSE_DATA_DIR) / "experiments" / "noise_decay.conf";
  const ExperimentConfig c = load_experiment_config(conf);
  REQUIRE(c.molecule_path.has_value());
  CHECK(fs::exists(*c.molecule_path));
  CHECK(c.molecule().size() == 10);
  CHECK(c.sample_spec().name == "sample1");
  for (const char* name : {"spectrum_theory", "phase_sweep", "fid_appendix"}) {
    CHECK_NOTHROW(load_experiment_config(fs::path(STARSENSE_DATA_DIR) / "experiments" / (std::string(name) + ".conf")));
  }
}

TEST_CASE("the register follows the least-decoupled interval") {
  const SpinSystem mol = two_propanol();
  CHECK(program_register(mol, parse_ok("decouple full\nacquire 8 1\n")).size() == 3);
  CHECK(program_register(mol, parse_ok("decouple selective\ndelay 1\ndecouple full\nacquire 8 1\n")).size() == 9);
  CHECK(program_register(mol, parse_ok("delay 1\ndecouple full\nacquire 8 1\n")).size() == 10);
  // A zero-length interval does not count.
  CHECK(program_register(mol, parse_ok("decouple none\ndecouple full\nacquire 8 1\n")).size() == 3);
}

TEST_CASE("sensing sequences prepare the entangled reference states") {
  const SpinSystem mol = two_propanol();
  for (double th : {0.0, 30.0, 50.0, 90.0}) {
    SequenceParams p = SequenceParams::for_system(mol, CnotMode::ideal);
    p.theta_deg = th;
    p.acquire_points = 16;
    for (auto seq : {BuiltinSequence::field_on_cc, BuiltinSequence::field_on_cs}) {
      const PulseProgram prog = builtin_sequence(seq, p);
      const SpinSystem reg = program_register(mol, prog);
      REQUIRE(reg.size() == 3);
      const ProgramRun run = execute(prog, reg, NoiseSpec::noiseless(3),
                                     initial_state(InitialState::observable_equivalent, reg));
      const Matrix ref = seq == BuiltinSequence::field_on_cc ? oracle::center_field_state(deg_to_rad(th))
                                                              : oracle::side_field_state(deg_to_rad(th));
      CHECK((run.state_before_acquire - ref).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(run.validity.ok());
      CHECK(run.validity.full_checks > 0);
    }
  }
}

TEST_CASE("an acquire-only program reproduces the direct FID") {
  const SpinSystem s = oracle::three_carbons();
  const Matrix rho = initial_state(InitialState::rho_i, s);
  const NoiseSpec noise = calibrate_rates(preset_sample(2), s);
  const ProgramRun run = execute(parse_ok("decouple full\nacquire 64 1\n"), s, noise, rho);
  FrameOffsets frame = resonance_frame(s);
  frame[0] -= InterpreterOptions{}.display_offset_rad_s;
  const Fid direct = acquire_fid(rho, s, build_hamiltonian(s, frame), noise, 64, 1e-3);
  for (std::size_t m = 0; m < 64; ++m) CHECK(std::abs(run.fid.samples[m] - direct.samples[m]) < 1e-13);
}

TEST_CASE("the validity monitor reports an unphysical start") {
  const SpinSystem s = oracle::three_carbons();
  Matrix bad = Matrix::Identity(8, 8) / 8.0;
  bad(0, 0) = -0.2;
  bad(7, 7) += 0.325;
  const ProgramRun run = execute(parse_ok("decouple full\ndelay 2\nacquire 8 1\n"), s, NoiseSpec::noiseless(3), bad);
  CHECK_FALSE(run.validity.ok());
  CHECK_FALSE(run.validity.first_violation.empty());
}

TEST_CASE("expected phases") {
  CHECK(expected_phases_deg(FieldSite::center, 30.0) == std::vector<double>{30.0, 30.0, 30.0});
  CHECK(expected_phases_deg(FieldSite::side, 50.0) == std::vector<double>{100.0, 0.0, -100.0});
}

TEST_CASE("experiment outputs are byte-identical across runs") {
  ExperimentConfig c;
  c.acquire_points = 1024;
  c.thetas_deg = {0.0, 50.0};
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  c.output_dir = a;
  run_spectrum_theory(c);
  const auto sweep_a = run_phase_sweep(c);
  c.jobs = 2;  // worker count must not change the result
  c.output_dir = b;
  run_spectrum_theory(c);
  const auto sweep_b = run_phase_sweep(c);
  CHECK(sweep_a.validity.ok());
  REQUIRE(sweep_a.peaks.size() == sweep_b.peaks.size());

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    REQUIRE_MESSAGE(fs::exists(b / rel), rel.string());
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 10);
  for (const char* f : {"spectrum_theory/peaks.csv", "spectrum_theory/plot_center_field.svg",
                        "spectrum_theory/plot_center_field.csv", "spectrum_theory/center_field_theta50_spectrum.csv",
                        "phase_sweep/plot_phases.svg", "phase_sweep/plot_phases.csv", "phase_sweep/peaks.csv"}) {
    CHECK_MESSAGE(fs::exists(a / f), f);
  }
  const std::string svg = slurp(a / "phase_sweep/plot_phases.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(slurp(a / "phase_sweep/plot_phases.csv").rfind("series,x,y\n", 0) == 0);
}

TEST_CASE("CLI exit codes") {
  const fs::path fixtures = fs::path(STARSENSE_FIXTURE_DIR) / "malformed";
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(fixtures)) {
    CHECK_MESSAGE(cli("check " + entry.path().string()) == 2, entry.path().filename().string());
    ++n;
  }
  CHECK(n == 20);
  for (const auto& entry : fs::directory_iterator(fs::path(STARSENSE_DATA_DIR) / "programs")) {
    CHECK_MESSAGE(cli("check " + entry.path().string()) == 0, entry.path().filename().string());
  }
  CHECK(cli("check /nonexistent/program.dsl") == 2);
  CHECK(cli("phase-sweep --cnot fuzzy") == 2);
  CHECK(cli("emit no_such_sequence") != 0);
  CHECK(cli("") != 0);
  const fs::path out = scratch_dir("cli_run");
  CHECK(cli("run " + (fs::path(STARSENSE_DATA_DIR) / "programs/echo_3p44.dsl").string() + " --points 256 -o " +
            out.string()) == 0);
  CHECK(fs::exists(out / "run/fid.csv"));
  CHECK(fs::exists(out / "run/peaks.csv"));
}
