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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracle.hpp"
#include "starsense/experiments.hpp"
#include "starsense/pulseprog.hpp"

using namespace starsense;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PulseProgram must_parse(std::string_view text) {
  const ParseResult r = parse_pulse_program(text);
  for (const auto& d : r.diagnostics) INFO(d.format("<test>"));
  REQUIRE(r.ok());
  return *r.program;
}

bool has_error_containing(const ParseResult& r, std::string_view needle) {
  for (const auto& d : r.diagnostics) {
    if (d.severity == Severity::error && d.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("echo program parses into four events") {
  const PulseProgram p = must_parse("delay 1.72\npulse CS 0 180\ndelay 1.72\nacquire 4096 0.25");
  REQUIRE(p.events.size() == 4);
  CHECK(std::get<DelayEvent>(p.events[0].kind).seconds() == doctest::Approx(1.72e-3));
  const auto& pulse = std::get<PulseEvent>(p.events[1].kind);
  CHECK(pulse.target == PulseTarget::cs);
  CHECK(pulse.theta() == doctest::Approx(kPi));
  CHECK(p.acquire().points == 4096);
  CHECK(p.acquire().dwell_s() == doctest::Approx(2.5e-4));
  CHECK(p.duration_s() == doctest::Approx(3.44e-3));
  CHECK(p.events[1].span.line == 2);
  CHECK(p.events[1].span.column == 1);
}

TEST_CASE("comments, blank lines and one-line repeat blocks") {
  const PulseProgram p = must_parse("# header\n\nrepeat 2 { delay 1 }  # trailing\nzrot ALL -45\nacquire 8 1\n");
  REQUIRE(p.events.size() == 3);
  const auto& r = std::get<RepeatEvent>(p.events[0].kind);
  CHECK(r.count == 2);
  REQUIRE(r.body.size() == 1);
  CHECK(p.duration_s() == doctest::Approx(2e-3));
}

TEST_CASE("empty input reports a missing acquire") {
  const ParseResult r = parse_pulse_program("");
  CHECK_FALSE(r.ok());
  CHECK(has_error_containing(r, "missing acquire"));
}

TEST_CASE("an unclosed repeat is reported at end of input") {
  const std::string text = "repeat 2 { delay 1";
  const ParseResult r = parse_pulse_program(text);
  CHECK_FALSE(r.ok());
  bool found = false;
  for (const auto& d : r.diagnostics) {
    if (d.message.find("unbalanced braces") != std::string::npos) {
      found = true;
      CHECK(d.span.offset == text.size());
    }
  }
  CHECK(found);
}

TEST_CASE("parsing continues past the first error") {
  const ParseResult r = parse_pulse_program("bogus 1\npulse QQ 0 90\ndelay x\nacquire 16 1\n");
  CHECK(r.diagnostics.size() == 3);
  CHECK(r.diagnostics[0].span.line == 1);
  CHECK(r.diagnostics[1].span.line == 2);
  CHECK(r.diagnostics[1].span.column == 7);
  CHECK(r.diagnostics[2].span.line == 3);
}

TEST_CASE("malformed fixtures each yield spanned diagnostics") {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(STARSENSE_FIXTURE_DIR "/malformed")) {
    const std::string text = slurp(entry.path());
    const ParseResult r = parse_pulse_program(text);
    INFO(entry.path().filename().string());
    CHECK_FALSE(r.ok());
    CHECK_FALSE(r.diagnostics.empty());
    for (const auto& d : r.diagnostics) {
      CHECK(d.span.line >= 1);
      CHECK(d.span.column >= 1);
      CHECK(d.span.offset + d.span.length <= text.size());
    }
    ++count;
  }
  CHECK(count == 20);
}

TEST_CASE("nesting depth limit") {
  std::string ok, deep;
  for (int k = 0; k < kMaxRepeatDepth; ++k) ok += "repeat 1 { ";
  ok += "delay 1 ";
  for (int k = 0; k < kMaxRepeatDepth; ++k) ok += "} ";
  ok += "\nacquire 8 1\n";
  CHECK(parse_pulse_program(ok).ok());
  deep = "repeat 1 { " + ok.substr(0, ok.find('\n')) + " }\nacquire 8 1\n";
  CHECK(has_error_containing(parse_pulse_program(deep), "nesting"));
}

TEST_CASE("print then parse round-trips exactly") {
  for (const auto& entry : std::filesystem::directory_iterator(STARSENSE_DATA_DIR "/programs")) {
    INFO(entry.path().filename().string());
    const PulseProgram p = must_parse(slurp(entry.path()));
    const PulseProgram again = must_parse(print_pulse_program(p));
    CHECK(again == p);
    const PulseProgram flat = expand(p).program;
    CHECK(must_parse(print_pulse_program(flat)) == flat);
  }
  SequenceParams sp;
  sp.theta_deg = 37.123456789;
  sp.tau_ms = 3.44 / 8;
  for (auto seq : {BuiltinSequence::field_on_cc, BuiltinSequence::field_on_cs, BuiltinSequence::xy8_sense}) {
    const PulseProgram p = builtin_sequence(seq, sp);
    CHECK(must_parse(print_pulse_program(p)) == p);
  }
}

TEST_CASE("equality ignores spans") {
  const PulseProgram a = must_parse("delay 1\nacquire 8 1\n");
  const PulseProgram b = must_parse("\n\n   delay 1\nacquire 8 1");
  CHECK(a == b);
  CHECK_FALSE(a == must_parse("delay 2\nacquire 8 1\n"));
}

TEST_CASE("expand: programs without repeats or zrot are unchanged") {
  const PulseProgram p = must_parse("decouple full\npulse CC 90 90\ndelay 2\npulse CS 0 180\nacquire 8 1\n");
  const ExpandedProgram x = expand(p);
  CHECK(x.program == p);
  CHECK(x.duration_s == doctest::Approx(2e-3));
}

TEST_CASE("expand unrolls an XY-8 block") {
  SequenceParams sp;
  sp.n_cycles = 8;
  sp.tau_ms = 0.43;
  const PulseProgram p = builtin_sequence(BuiltinSequence::xy8_sense, sp);
  const ExpandedProgram x = expand(p);
  std::size_t pulses = 0, last_pulse = 0, first_zrot = x.program.events.size();
  for (std::size_t i = 0; i < x.program.events.size(); ++i) {
    const auto& e = x.program.events[i];
    CHECK_FALSE(std::holds_alternative<RepeatEvent>(e.kind));
    if (std::holds_alternative<VirtualZEvent>(e.kind)) first_zrot = std::min(first_zrot, i);
    if (const auto* pe = std::get_if<PulseEvent>(&e.kind)) {
      last_pulse = i;
      if (pe->theta_deg == 180.0 && pe->target != PulseTarget::cs) ++pulses;
    }
  }
  // Residual frame rotations only after the last pulse.
  CHECK(first_zrot > last_pulse);
  CHECK(pulses == 64);
  CHECK(x.duration_s == doctest::Approx(p.duration_s()));
}

TEST_CASE("expand folds zrot into the next pulse phase") {
  const ExpandedProgram x = expand(must_parse("zrot CC 50\npulse CC 0 90\nacquire 8 1\n"));
  REQUIRE(x.program.events.size() == 3);
  const auto& p = std::get<PulseEvent>(x.program.events[0].kind);
  CHECK(p.phi_deg == doctest::Approx(-50.0));
  CHECK(p.theta_deg == 90.0);
  // The pending frame is played before acquisition.
  const auto& z = std::get<VirtualZEvent>(x.program.events[1].kind);
  CHECK(z.target == PulseTarget::cc);
  CHECK(z.theta_deg == 50.0);
}

TEST_CASE("expand splits ALL pulses when the frames differ") {
  const ExpandedProgram x = expand(must_parse("zrot CS 30\npulse ALL 90 180\nacquire 8 1\n"));
  REQUIRE(x.program.events.size() == 4);
  CHECK(std::get<PulseEvent>(x.program.events[0].kind).target == PulseTarget::cc);
  CHECK(std::get<PulseEvent>(x.program.events[0].kind).phi_deg == 90.0);
  CHECK(std::get<PulseEvent>(x.program.events[1].kind).target == PulseTarget::cs);
  CHECK(std::get<PulseEvent>(x.program.events[1].kind).phi_deg == 60.0);
  // Expanding again changes nothing.
  CHECK(expand(x.program).program == x.program);
}

TEST_CASE("builtin sequence structure") {
  SequenceParams sp;
  sp.n_cycles = 3;
  sp.tau_ms = 0.43;
  const PulseProgram x = builtin_sequence(BuiltinSequence::xy8_sense, sp);
  const double cnots = 2 * sp.entangling_delay_ms * 1e-3;
  CHECK(x.duration_s() == doctest::Approx(3 * 8 * 0.43e-3 + cnots));
  // 8 XY-8 pulses per cycle on each carbon on top of the CNOT pulses.
  const PulseProgram none = builtin_sequence(BuiltinSequence::xy8_sense, [&] {
    SequenceParams q = sp;
    q.xy8_target = PulseTarget::cc;
    return q;
  }());
  CHECK(x.pulse_count(PulseTarget::cc) == 1 + 8 * 3);
  CHECK(x.pulse_count(PulseTarget::cs) == 4 + 8 * 3);
  CHECK(none.pulse_count(PulseTarget::cs) == 4);

  sp.tau_ms = 3.4;
  const PulseProgram cs = builtin_sequence(BuiltinSequence::field_on_cs, sp);
  CHECK(cs.duration_s() == doctest::Approx(3.4e-3 + cnots));
  CHECK(cs.acquire().points == 4096);
  CHECK_THROWS_AS(builtin_sequence(BuiltinSequence::field_on_cc, [] {
                    SequenceParams q;
                    q.tau_ms = 0.0;
                    return q;
                  }()),
                  std::invalid_argument);
  CHECK(parse_builtin_sequence("xy8_sense") == BuiltinSequence::xy8_sense);
  CHECK_THROWS_AS(parse_builtin_sequence("xy16"), std::invalid_argument);
}

TEST_CASE("selective sensing switches the environment only around the sensing window") {
  SequenceParams sp;
  sp.sensing_mode = DecouplingMode::selective;
  const PulseProgram p = builtin_sequence(BuiltinSequence::field_on_cs, sp);
  std::vector<DecouplingMode> modes;
  for (const auto& e : p.events) {
    if (const auto* d = std::get_if<DecoupleEvent>(&e.kind)) modes.push_back(d->mode);
  }
  CHECK(modes == std::vector<DecouplingMode>{DecouplingMode::full, DecouplingMode::selective, DecouplingMode::full});
  CHECK(program_register(two_propanol(), p).size() == 9);
}

TEST_CASE("expansion preserves the implemented operation") {
  const SpinSystem s = oracle::three_carbons();
  const NoiseSpec noise = calibrate_rates(preset_sample(1), s);
  InterpreterOptions opt;
  opt.max_step_s = 2e-4;
  std::mt19937_64 rng(99);
  const Matrix rho0 = oracle::random_state(8, rng);
  std::vector<PulseProgram> programs;
  SequenceParams sp;
  sp.theta_deg = 50;
  sp.acquire_points = 8;
  sp.n_cycles = 2;
  sp.tau_ms = 0.43;
  for (auto seq : {BuiltinSequence::field_on_cc, BuiltinSequence::field_on_cs, BuiltinSequence::xy8_sense}) {
    programs.push_back(builtin_sequence(seq, sp));
  }
  programs.push_back(must_parse("zrot CC 33\nzrot CS -71\npulse ALL 20 90\nrepeat 3 { zrot ALL 10\ndelay 0.5\npulse CS 45 180 }\nacquire 8 1\n"));
  for (const auto& p : programs) {
    const ProgramRun a = execute(p, s, noise, rho0, opt);
    const ProgramRun b = execute(expand(p).program, s, noise, rho0, opt);
    CHECK((a.state_before_acquire - b.state_before_acquire).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("builtin field-on-CC at theta = 0 acquires no phase") {
  const SpinSystem s = oracle::three_carbons();
  SequenceParams sp;
  sp.acquire_points = 8;
  const ProgramRun run = execute(builtin_sequence(BuiltinSequence::field_on_cc, sp), s,
                                 NoiseSpec::noiseless(3), initial_state(InitialState::observable_equivalent, s));
  CHECK((run.state_before_acquire - oracle::center_field_state(0.0)).cwiseAbs().maxCoeff() < 1e-12);
}
