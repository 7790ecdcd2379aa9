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
#include <cmath>
#include <fstream>
#include <atomic>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

#include "starsense/experiments.hpp"
#include "starsense/keyvalue.hpp"

namespace starsense {

// ---------------------------------------------------------------------------
// Configuration

namespace {

bool is_sample_preset(const std::string& s) {
  return s == "sample1" || s == "sample2" || s == "sample3" || s == "sample4";
}

bool is_builtin_sequence(const std::string& s) {
  return s == "field_on_cc" || s == "field_on_cs" || s == "xy8_sense";
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("experiment config: " + m); };
  if (molecule_path && !std::filesystem::exists(*molecule_path)) {
    fail("molecule file not found: " + molecule_path->string());
  }
  if (!is_sample_preset(sample) && !std::filesystem::exists(sample)) {
    fail("sample is neither a preset (sample1..sample4) nor an existing file: " + sample);
  }
  if (!is_builtin_sequence(sequence) && !std::filesystem::exists(sequence)) {
    fail("sequence is neither a builtin nor an existing DSL file: " + sequence);
  }
  for (double t : thetas_deg) {
    if (!std::isfinite(t)) fail("theta values must be finite");
  }
  if (!(tau_ms > 0.0) || !(tau_unit_ms > 0.0)) fail("tau must be > 0");
  for (int c : cycles) {
    if (c < 1) fail("cycle counts must be >= 1");
  }
  if (acquire_points < 2) fail("acquire_points must be >= 2");
  if (!(dwell_ms > 0.0)) fail("dwell_ms must be > 0");
  if (zero_fill < 1) fail("zero_fill must be >= 1");
  if (!(jt2 > 0.0)) fail("jt2 must be > 0");
  if (!(max_step_s > 0.0)) fail("max_step_s must be > 0");
  if (jobs < 1) fail("jobs must be >= 1");
}

SpinSystem ExperimentConfig::molecule() const {
  return molecule_path ? load_molecule(*molecule_path) : two_propanol();
}

SampleSpec ExperimentConfig::sample_spec() const {
  if (is_sample_preset(sample)) return preset_sample(sample.back() - '0');
  return load_sample(sample);
}

InterpreterOptions ExperimentConfig::interpreter_options() const {
  InterpreterOptions o;
  o.frame = cnot;
  o.max_step_s = max_step_s;
  o.check_every = check_every;
  return o;
}

namespace {

ExperimentConfig parse_config(const KeyValueDocument& doc, const std::filesystem::path& base) {
  ExperimentConfig c;
  static const char* kKnown[] = {"molecule", "sample", "sequence", "thetas_deg", "tau_ms", "tau_unit_ms",
                                 "cycles", "decoupling", "cnot", "initial_state", "acquire_points",
                                 "dwell_ms", "zero_fill", "jt2", "max_step_s", "check_every", "jobs",
                                 "output_dir"};
  for (const auto& e : doc.entries()) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char* k) { return e.key == k; }) ==
        std::end(kKnown)) {
      doc.fail(e, "unknown key '" + e.key + "'");
    }
  }
  auto integer = [&](const char* key, int fallback) {
    const KeyValueEntry* e = doc.find(key);
    if (!e) return fallback;
    const double v = doc.number(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) doc.fail(*e, std::string(key) + " must be an integer");
    return static_cast<int>(v);
  };
  auto list = [&](const char* key) -> std::optional<std::vector<double>> {
    const KeyValueEntry* e = doc.find(key);
    if (!e) return std::nullopt;
    auto v = parse_quantity_list(e->value);
    if (!v || v->empty()) doc.fail(*e, std::string("malformed list for ") + key);
    return v;
  };
  auto choice = [&](const char* key, auto parser, auto fallback) {
    const KeyValueEntry* e = doc.find(key);
    if (!e) return fallback;
    try {
      return parser(e->value);
    } catch (const std::invalid_argument& ex) {
      doc.fail(*e, ex.what());
    }
  };

  if (auto m = doc.get("molecule")) c.molecule_path = resolve(base, *m);
  if (auto s = doc.get("sample")) c.sample = is_sample_preset(*s) ? *s : resolve(base, *s).string();
  if (auto s = doc.get("sequence")) c.sequence = is_builtin_sequence(*s) ? *s : resolve(base, *s).string();
  if (auto t = list("thetas_deg")) c.thetas_deg = *t;
  c.tau_ms = doc.number_or("tau_ms", c.tau_ms);
  c.tau_unit_ms = doc.number_or("tau_unit_ms", c.tau_unit_ms);
  if (auto n = list("cycles")) {
    c.cycles.clear();
    for (double v : *n) {
      if (v != std::floor(v)) doc.fail(*doc.find("cycles"), "cycle counts must be integers");
      c.cycles.push_back(static_cast<int>(v));
    }
  }
  c.decoupling = choice("decoupling", [](const std::string& s) { return parse_decoupling_mode(s); }, c.decoupling);
  c.cnot = choice(
      "cnot",
      [](const std::string& s) {
        if (s == "ideal") return CnotMode::ideal;
        if (s == "quantized") return CnotMode::quantized;
        throw std::invalid_argument("cnot must be ideal or quantized");
      },
      c.cnot);
  c.initial = choice("initial_state", [](const std::string& s) { return parse_initial_state(s); }, c.initial);
  c.acquire_points = integer("acquire_points", c.acquire_points);
  c.dwell_ms = doc.number_or("dwell_ms", c.dwell_ms);
  c.zero_fill = integer("zero_fill", c.zero_fill);
  c.jt2 = doc.number_or("jt2", c.jt2);
  c.max_step_s = doc.number_or("max_step_s", c.max_step_s);
  c.check_every = static_cast<std::size_t>(std::max(0, integer("check_every", static_cast<int>(c.check_every))));
  c.jobs = integer("jobs", c.jobs);
  c.output_dir = doc.string_or("output_dir", c.output_dir.string());
  c.validate();
  return c;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source) {
  return parse_config(KeyValueDocument::parse(text, source), {});
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_config(KeyValueDocument::load(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

// Runs fn(i) for i < n on up to `jobs` threads; results keep their index.
template <class F>
auto parallel_map(std::size_t n, int jobs, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i));
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < std::min<int>(jobs, static_cast<int>(n)); ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < n; i = next++) slots[i].emplace(fn(i));
      }));
    }
    for (auto& w : workers) w.get();  // rethrows the first failure
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file " + path.string());
  return out;
}

std::string theta_tag(double theta_deg) {
  std::ostringstream os;
  os << "theta" << theta_deg;
  return os.str();
}

double j_cc_cs(const SpinSystem& system) {
  const auto sides = system.indices_with_role(SpinRole::side);
  if (sides.empty()) throw std::invalid_argument("molecule has no side spin");
  return system.coupling(system.index_of("CC"), sides.front());
}

double phase_error_deg(double measured, double expected) {
  return rad_to_deg(wrap_phase(deg_to_rad(measured - expected)));
}

void write_peak_records(const std::filesystem::path& path, const std::vector<PeakRecord>& peaks) {
  auto out = open_output(path);
  out << "sequence,theta_deg,line,center_ppm,phase_deg,expected_deg,error_deg,amplitude\n";
  for (const auto& p : peaks) {
    out << p.sequence << ',' << num(p.theta_deg) << ',' << p.line << ',' << num(p.center_ppm) << ','
        << num(p.phase_deg) << ',' << num(p.expected_deg) << ',' << num(phase_error_deg(p.phase_deg, p.expected_deg))
        << ',' << num(p.amplitude) << '\n';
  }
}

// Real part of the spectrum within +-3J of the CC line, on the ppm axis.
PlotSeries spectrum_series(const Spectrum& spec, double display_offset, double j, std::string name) {
  PlotSeries s{std::move(name), {}, {}, false};
  const double scale = 1.0 / static_cast<double>(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (std::abs(spec.freq_rad_s[k] - display_offset) > 3.0 * j) continue;
    s.x.push_back(spec.ppm[k]);
    s.y.push_back(spec.bins[k].real() * scale);
  }
  return s;
}

std::vector<PeakRecord> peak_records(const std::vector<Peak>& peaks, const std::string& sequence, double theta_deg,
                                     const std::vector<double>& expected) {
  std::vector<PeakRecord> out;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    out.push_back({sequence, theta_deg, static_cast<int>(k), peaks[k].center_ppm, rad_to_deg(peaks[k].phase),
                   expected[k], peaks[k].magnitude});
  }
  return out;
}

}  // namespace

std::vector<double> expected_phases_deg(FieldSite site, double theta_deg) {
  // (-180, 180], exact in degrees.
  auto w = [](double d) {
    const double r = std::remainder(d, 360.0);
    return r == -180.0 ? 180.0 : r;
  };
  if (site == FieldSite::center) return {w(theta_deg), w(theta_deg), w(theta_deg)};
  return {w(2.0 * theta_deg), 0.0, w(-2.0 * theta_deg)};
}

double triplet_amplitude(const Fid& fid, const SpinSystem& system, const ExperimentConfig& config,
                         double calibration_decay_rate) {
  const double offset = InterpreterOptions{}.display_offset_rad_s;
  const Spectrum spec = spectrum(fid, config.zero_fill, cc_ppm_axis(system, offset));
  const auto centers = triplet_centers(system, offset);
  PhaseReadoutOptions opt;
  opt.calibration_decay_rate = calibration_decay_rate;
  double total = 0.0;
  for (const auto& p : extract_peak_phases(spec, centers, j_cc_cs(system) / 4.0, opt)) total += p.magnitude;
  return total;
}

// ---------------------------------------------------------------------------
// Runners

SpectrumTheoryResult run_spectrum_theory(const ExperimentConfig& config) {
  config.validate();
  const SpinSystem mol = config.molecule();
  const double j = j_cc_cs(mol);
  const double offset = InterpreterOptions{}.display_offset_rad_s;
  const PpmAxis axis = cc_ppm_axis(mol, offset);
  const auto centers = triplet_centers(mol, offset);
  const auto dir = config.output_dir / "spectrum_theory";

  SpectrumTheoryResult result;
  for (FieldSite site : {FieldSite::center, FieldSite::side}) {
    Plot plot{"Model spectra, " + to_string(site) + " (JT2 = " + num(config.jt2) + ")", "ppm",
              "Re S(omega) / N", {}, true};
    for (double theta : config.thetas_deg) {
      SignalModelParams p{deg_to_rad(theta), j, offset, config.jt2 / j};
      const Fid fid = analytic_fid(p, site, static_cast<std::size_t>(config.acquire_points), config.dwell_ms * 1e-3);
      const Spectrum spec = spectrum(fid, config.zero_fill, axis);
      PhaseReadoutOptions opt;
      opt.calibration_decay_rate = 1.0 / p.t2;
      const auto peaks = extract_peak_phases(spec, centers, j / 4.0, opt);
      const auto recs = peak_records(peaks, to_string(site), theta, expected_phases_deg(site, theta));
      result.peaks.insert(result.peaks.end(), recs.begin(), recs.end());

      auto out = open_output(dir / (to_string(site) + "_" + theta_tag(theta) + "_spectrum.csv"));
      write_spectrum_csv(out, spec);
      plot.series.push_back(spectrum_series(spec, offset, j, "theta = " + num(theta) + " deg"));
    }
    write_plot(plot, dir / ("plot_" + to_string(site)));
  }
  write_peak_records(dir / "peaks.csv", result.peaks);
  return result;
}

PhaseSweepResult run_phase_sweep(const ExperimentConfig& config) {
  config.validate();
  const SpinSystem mol = config.molecule();
  const SampleSpec sample = config.sample_spec();
  const double j = j_cc_cs(mol);
  const InterpreterOptions opts = config.interpreter_options();
  const double offset = opts.display_offset_rad_s;
  const auto centers = triplet_centers(mol, offset);
  const auto dir = config.output_dir / "phase_sweep";

  struct Task {
    BuiltinSequence seq;
    double theta;
  };
  std::vector<Task> tasks;
  for (double theta : config.thetas_deg) {
    for (auto seq : {BuiltinSequence::field_on_cc, BuiltinSequence::field_on_cs}) tasks.push_back({seq, theta});
  }
  struct Outcome {
    Spectrum spec;
    std::vector<Peak> peaks;
    ValidityReport validity;
  };
  const auto outcomes = parallel_map(tasks.size(), config.jobs, [&](std::size_t i) {
    SequenceParams p = SequenceParams::for_system(mol, config.cnot);
    p.theta_deg = tasks[i].theta;
    p.tau_ms = config.tau_ms;
    p.sensing_mode = config.decoupling;
    p.acquire_points = config.acquire_points;
    p.dwell_ms = config.dwell_ms;
    const PulseProgram prog = builtin_sequence(tasks[i].seq, p);
    const ProgramRun run = run_program(prog, mol, sample, config.initial, opts);
    const NoiseSpec rates = calibrate_rates(sample, run.register_system);
    PhaseReadoutOptions ro;
    ro.calibration_decay_rate = 0.5 * rates.rates[run.register_system.index_of("CC")];
    Spectrum spec = spectrum(run.fid, config.zero_fill, cc_ppm_axis(mol, offset));
    auto peaks = extract_peak_phases(spec, centers, j / 4.0, ro);
    return Outcome{std::move(spec), std::move(peaks), run.validity};
  });

  PhaseSweepResult result;
  Plot phases{"Triplet phases vs theta", "theta (deg)", "phase (deg)", {}, false};
  std::map<std::string, PlotSeries> series;
  Plot spectra_cc{"Simulated spectra, field on CC", "ppm", "Re S(omega) / N", {}, true};
  Plot spectra_cs{"Simulated spectra, field on CS", "ppm", "Re S(omega) / N", {}, true};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto site = tasks[i].seq == BuiltinSequence::field_on_cc ? FieldSite::center : FieldSite::side;
    const std::string name(to_string(tasks[i].seq));
    const auto recs = peak_records(outcomes[i].peaks, name, tasks[i].theta, expected_phases_deg(site, tasks[i].theta));
    result.peaks.insert(result.peaks.end(), recs.begin(), recs.end());
    result.validity.merge(outcomes[i].validity);
    for (const auto& r : recs) {
      const std::string key = name + " line " + std::to_string(r.line);
      auto& s = series[key];
      s.name = key;
      s.markers = true;
      s.x.push_back(r.theta_deg);
      s.y.push_back(r.phase_deg);
    }
    auto out = open_output(dir / (name + "_" + theta_tag(tasks[i].theta) + "_spectrum.csv"));
    write_spectrum_csv(out, outcomes[i].spec);
    (site == FieldSite::center ? spectra_cc : spectra_cs)
        .series.push_back(spectrum_series(outcomes[i].spec, offset, j, "theta = " + num(tasks[i].theta) + " deg"));
  }
  for (auto& [k, s] : series) phases.series.push_back(std::move(s));
  write_peak_records(dir / "peaks.csv", result.peaks);
  write_plot(phases, dir / "plot_phases");
  write_plot(spectra_cc, dir / "plot_spectra_field_on_cc");
  write_plot(spectra_cs, dir / "plot_spectra_field_on_cs");
  return result;
}

const DecayCurve& NoiseDecayResult::curve(std::string_view label) const {
  for (const auto& c : curves) {
    if (c.label == label) return c;
  }
  throw std::out_of_range("no decay curve '" + std::string(label) + "'");
}

NoiseDecayResult run_noise_decay(const ExperimentConfig& config) {
  config.validate();
  if (config.cycles.size() < 4) throw ConfigError("noise-decay needs at least 4 cycle counts to fit");
  const SpinSystem mol = config.molecule();
  const SampleSpec sample = config.sample_spec();
  const InterpreterOptions opts = config.interpreter_options();
  const auto dir = config.output_dir / "noise_decay";

  struct Variant {
    const char* label;
    BuiltinSequence seq;
    DecouplingMode mode;
  };
  const Variant variants[] = {{"full", BuiltinSequence::field_on_cs, DecouplingMode::full},
                              {"selective", BuiltinSequence::field_on_cs, DecouplingMode::selective},
                              {"selective_xy8", BuiltinSequence::xy8_sense, DecouplingMode::selective}};
  struct Task {
    std::size_t variant;
    int n;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < 3; ++v) {
    for (int n : config.cycles) tasks.push_back({v, n});
  }
  struct Outcome {
    double amplitude;
    ValidityReport validity;
  };
  const auto outcomes = parallel_map(tasks.size(), config.jobs, [&](std::size_t i) {
    const Variant& v = variants[tasks[i].variant];
    SequenceParams p = SequenceParams::for_system(mol, config.cnot);
    p.theta_deg = 0.0;
    p.sensing_mode = v.mode;
    p.acquire_points = config.acquire_points;
    p.dwell_ms = config.dwell_ms;
    if (v.seq == BuiltinSequence::xy8_sense) {
      // One XY-8 cycle per time unit, pulses evenly spaced.
      p.n_cycles = tasks[i].n;
      p.tau_ms = config.tau_unit_ms / 8.0;
    } else {
      p.tau_ms = config.tau_unit_ms * tasks[i].n;
    }
    const ProgramRun run = run_program(builtin_sequence(v.seq, p), mol, sample, config.initial, opts);
    const NoiseSpec rates = calibrate_rates(sample, run.register_system);
    const double decay = 0.5 * rates.rates[run.register_system.index_of("CC")];
    return Outcome{triplet_amplitude(run.fid, run.register_system, config, decay), run.validity};
  });

  NoiseDecayResult result;
  for (const auto& v : variants) result.curves.push_back({v.label, {}, {}, {}});
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& c = result.curves[tasks[i].variant];
    c.tau_s.push_back(config.tau_unit_ms * 1e-3 * tasks[i].n);
    c.amplitude.push_back(outcomes[i].amplitude);
    result.validity.merge(outcomes[i].validity);
  }
  for (auto& c : result.curves) c.fit = fit_decay(c.tau_s, c.amplitude);

  auto amp = open_output(dir / "amplitudes.csv");
  amp << "curve,n,tau_ms,amplitude\n";
  for (const auto& c : result.curves) {
    for (std::size_t k = 0; k < c.tau_s.size(); ++k) {
      amp << c.label << ',' << config.cycles[k] << ',' << num(c.tau_s[k] * 1e3) << ',' << num(c.amplitude[k]) << '\n';
    }
  }
  auto fits = open_output(dir / "fits.csv");
  fits << "curve,model,amplitude,decay_ms,residual,stretched_amplitude,stretched_decay_ms,beta,"
          "stretched_residual,non_exponentiality\n";
  for (const auto& c : result.curves) {
    const DecayFit& f = c.fit;
    fits << c.label << ',' << (f.model == DecayFit::Model::exponential ? "exponential" : "stretched") << ','
         << num(f.amplitude) << ',' << num(f.decay_time_s * 1e3) << ',' << num(f.residual) << ','
         << num(f.stretched_amplitude) << ',' << num(f.stretched_time_s * 1e3) << ',' << num(f.beta) << ','
         << num(f.stretched_residual) << ',' << num(f.non_exponentiality) << '\n';
  }
  Plot plot{"Signal amplitude vs sensing time (" + sample.name + ")", "tau (ms)", "amplitude", {}, false};
  for (const auto& c : result.curves) {
    PlotSeries s{c.label, {}, c.amplitude, true};
    for (double t : c.tau_s) s.x.push_back(t * 1e3);
    plot.series.push_back(std::move(s));
  }
  write_plot(plot, dir / "plot_decay");
  return result;
}

FidAppendixResult run_fid_appendix(const ExperimentConfig& config) {
  config.validate();
  const SpinSystem mol = config.molecule();
  const InterpreterOptions opts = config.interpreter_options();
  const auto dir = config.output_dir / "fid_appendix";
  const auto samples = preset_samples();

  struct Task {
    std::size_t sample;
    DecouplingMode mode;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (auto mode : {DecouplingMode::full, DecouplingMode::selective}) tasks.push_back({s, mode});
  }
  struct Outcome {
    FidTrace trace;
    ValidityReport validity;
  };
  const auto outcomes = parallel_map(tasks.size(), config.jobs, [&](std::size_t i) {
    PulseProgram prog;
    prog.events.push_back({DecoupleEvent{tasks[i].mode}, {}});
    prog.events.push_back({AcquireEvent{config.acquire_points, config.dwell_ms}, {}});
    const ProgramRun run = run_program(prog, mol, samples[tasks[i].sample], InitialState::rho_i, opts);
    std::vector<double> t, y;
    for (std::size_t m = 0; m < run.fid.size(); ++m) {
      t.push_back(run.fid.time(m));
      y.push_back(std::abs(run.fid.samples[m]));
    }
    FidTrace trace{samples[tasks[i].sample].name, tasks[i].mode, run.fid, fit_decay(t, y)};
    return Outcome{std::move(trace), run.validity};
  });

  FidAppendixResult result;
  for (const auto& o : outcomes) {
    result.traces.push_back(o.trace);
    result.validity.merge(o.validity);
  }
  auto fits = open_output(dir / "fits.csv");
  fits << "sample,mode,model,decay_ms,residual,stretched_decay_ms,beta,stretched_residual,non_exponentiality\n";
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(config.acquire_points) / 512);
  for (auto mode : {DecouplingMode::full, DecouplingMode::selective}) {
    Plot plot{"FID from rho_i, " + to_string(mode) + " decoupling", "t (ms)", "Re S(t)", {}, false};
    for (const auto& tr : result.traces) {
      if (tr.mode != mode) continue;
      auto out = open_output(dir / (tr.sample + "_" + to_string(mode) + "_fid.csv"));
      write_fid_csv(out, tr.fid);
      const DecayFit& f = tr.fit;
      fits << tr.sample << ',' << to_string(mode) << ','
           << (f.model == DecayFit::Model::exponential ? "exponential" : "stretched") << ','
           << num(f.decay_time_s * 1e3) << ',' << num(f.residual) << ',' << num(f.stretched_time_s * 1e3) << ','
           << num(f.beta) << ',' << num(f.stretched_residual) << ',' << num(f.non_exponentiality) << '\n';
      PlotSeries data{tr.sample, {}, {}, false};
      PlotSeries model{tr.sample + (mode == DecouplingMode::full ? " exp fit" : " stretched fit"), {}, {}, false};
      for (std::size_t m = 0; m < tr.fid.size(); m += stride) {
        const double t = tr.fid.time(m);
        data.x.push_back(t * 1e3);
        data.y.push_back(tr.fid.samples[m].real());
        model.x.push_back(t * 1e3);
        model.y.push_back(mode == DecouplingMode::full
                              ? f.amplitude * std::exp(-t / f.decay_time_s)
                              : f.stretched_amplitude * std::exp(-std::pow(t / f.stretched_time_s, f.beta)));
      }
      plot.series.push_back(std::move(data));
      plot.series.push_back(std::move(model));
    }
    write_plot(plot, dir / ("plot_" + to_string(mode)));
  }
  return result;
}

}  // namespace starsense
