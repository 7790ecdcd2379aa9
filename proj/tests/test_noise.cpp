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

#include "oracle.hpp"
#include "starsense/noise.hpp"

using namespace starsense;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix single(double a, double b, Complex c) {
  Matrix m(2, 2);
  m << a, c, std::conj(c), b;
  return m;
}

// Trotter result vs the exact semigroup for a register, after `steps` steps.
double trotter_error(const SpinSystem& s, const NoiseSpec& noise, double dt, int steps, const Matrix& rho0) {
  const DiagonalHamiltonian h = build_hamiltonian(s, resonance_frame(s));
  const auto traj = evolve(DensityMatrix(rho0), h, noise, dt, static_cast<std::size_t>(steps));
  const Matrix super = oracle::lindblad_superoperator(h.to_matrix(), oracle::flip_jumps(s.size(), noise.rates));
  const Matrix prop = oracle::expm(super * (dt * steps));
  return (traj.back().matrix() - oracle::apply_superoperator(prop, rho0)).norm();
}

}  // namespace

TEST_CASE("table of samples") {
  const auto all = preset_samples();
  REQUIRE(all.size() == 4);
  CHECK(all[0].impurity_concentration_mM == 12);
  CHECK(all[0].t1_cc_s == 1.3);
  CHECK(all[0].t2_full_s == 0.3);
  CHECK(all[3].impurity_concentration_mM == 94);
  CHECK(all[3].t1_hss_s == 0.017);
  CHECK(preset_sample(2).t2_selective_s == 0.039);
  CHECK_THROWS_AS(preset_sample(5), std::invalid_argument);
  for (const auto& s : all) CHECK(parse_sample(format_sample(s)).t1_cc_s == s.t1_cc_s);
  CHECK_THROWS_AS(parse_sample("name = x\nt1_cc_s = -1\n"), ConfigError);
}

TEST_CASE("shipped sample files match the presets") {
  for (int i = 1; i <= 4; ++i) {
    const SampleSpec f = load_sample(std::string(STARSENSE_DATA_DIR "/samples/sample") + std::to_string(i) + ".conf");
    const SampleSpec p = preset_sample(i);
    CHECK(f.impurity_concentration_mM == p.impurity_concentration_mM);
    CHECK(f.t1_cc_s == p.t1_cc_s);
    CHECK(f.t1_hss_s == p.t1_hss_s);
    CHECK(f.t2_full_s == p.t2_full_s);
    CHECK(f.t2_selective_s == p.t2_selective_s);
  }
}

TEST_CASE("calibrated rates") {
  const SpinSystem s = two_propanol();
  const NoiseSpec n = calibrate_rates(preset_sample(1), s);
  CHECK(n.rates[s.index_of("CC")] == doctest::Approx(1.0 / 1.3));
  CHECK(n.rates[s.index_of("CS2")] == doctest::Approx(1.0 / 1.3));
  CHECK(n.rates[s.index_of("HS3")] == doctest::Approx(1.0 / 0.093));
  CHECK(n.rates[s.index_of("HC")] == doctest::Approx(1.0 / 0.093));
  CHECK(calibrate_rates(preset_sample(4), s).rates[s.index_of("HS1")] == doctest::Approx(58.8).epsilon(1e-3));
  CHECK(n.max_rate() == doctest::Approx(1.0 / 0.093));
}

TEST_CASE("rates scale linearly with impurity concentration") {
  const SpinSystem s = two_propanol();
  const Relaxivity r = relaxivity_from(preset_sample(1));
  for (double c : {12.0, 26.0, 47.0, 94.0}) {
    const NoiseSpec a = rates_from_relaxivity(r, c, s);
    const NoiseSpec b = rates_from_relaxivity(r, 2.0 * c, s);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(b.rates[k] == 2.0 * a.rates[k]);
  }
  const SampleSpec doubled = preset_sample(1).scaled_to(24.0);
  CHECK(doubled.t1_cc_s == doctest::Approx(0.65));
  CHECK(rates_from_relaxivity(r, 12.0, s).rates[0] == doctest::Approx(1.0 / 1.3));
}

TEST_CASE("decoupling modes") {
  const SpinSystem s = two_propanol();
  CHECK(apply_decoupling(s, DecouplingMode::full).size() == 3);
  CHECK(apply_decoupling(s, DecouplingMode::selective).size() == 9);
  CHECK(apply_decoupling(s, DecouplingMode::none).size() == 10);
  CHECK(decoupled_spins(s, DecouplingMode::selective) == std::vector<std::string>{"HC"});
  CHECK(parse_decoupling_mode("selective") == DecouplingMode::selective);
  CHECK_THROWS_AS(parse_decoupling_mode("partial"), std::invalid_argument);
}

TEST_CASE("Kraus operators form the flip channel") {
  const LindbladChannel ch{0, 7.0};
  const double dt = 0.013;
  const auto k = ch.kraus(dt);
  Matrix2 sum = Matrix2::Zero();
  for (const auto& m : k) sum += m.adjoint() * m;
  CHECK(max_abs(Matrix(sum - Matrix2::Identity())) < 1e-15);

  std::mt19937_64 rng(5);
  const Matrix rho = oracle::random_state(2, rng);
  Matrix viaKraus = Matrix::Zero(2, 2);
  for (const auto& m : k) viaKraus += Matrix(m) * rho * Matrix(m).adjoint();
  Matrix fast = rho;
  apply_flip_channel(fast, 1, 0, ch.rate, dt);
  CHECK(max_abs(fast - viaKraus) < 1e-15);

  // Both equal the exponentiated generator.
  std::vector<Matrix> jumps;
  for (const auto& j : ch.jump_operators()) jumps.emplace_back(j);
  const Matrix super = oracle::lindblad_superoperator(Matrix::Zero(2, 2), jumps);
  CHECK(max_abs(oracle::apply_superoperator(oracle::expm(super * dt), rho) - fast) < 1e-14);
}

TEST_CASE("single-spin decay matches the closed form") {
  const double gamma = 3.7;
  const SpinSystem one({{"CC", "13C", 0.0, SpinRole::center}}, {}, {{"13C", 100.6e6}});
  const DiagonalHamiltonian h = build_hamiltonian(one, resonance_frame(one));
  const NoiseSpec noise{{gamma}};
  const double dt = 1e-3;
  const auto tx = evolve(DensityMatrix(single(0.5, 0.5, 0.5)), h, noise, dt, 400);
  const auto tz = evolve(DensityMatrix(single(1.0, 0.0, 0.0)), h, noise, dt, 400);
  const Matrix sx = Matrix(pauli(Axis::x)), sz = Matrix(pauli(Axis::z));
  for (std::size_t k = 0; k < tx.size(); k += 20) {
    const double t = dt * static_cast<double>(k);
    CHECK(std::abs(tx[k].expectation(sx).real() - std::exp(-gamma * t / 2.0)) < 1e-12);
    CHECK(std::abs(tz[k].expectation(sz).real() - std::exp(-gamma * t)) < 1e-12);
  }
}

TEST_CASE("symmetric splitting agrees with the dense Liouvillian") {
  const SpinSystem s = oracle::three_carbons();
  const NoiseSpec noise = calibrate_rates(preset_sample(4), s);
  std::mt19937_64 rng(19);
  const Matrix rho0 = oracle::random_state(8, rng);
  CHECK(trotter_error(s, noise, 1e-5, 100, rho0) <= 1e-8);

  // Second-order convergence: halving dt quarters the error.
  const SpinSystem mixed = two_propanol().without({"HS2", "HS3", "HS4", "HS5", "HS6", "CS2", "HC"});
  const NoiseSpec fast = calibrate_rates(preset_sample(4), mixed);
  const Matrix r0 = oracle::random_state(mixed.dim(), rng);
  const double e1 = trotter_error(mixed, fast, 4e-4, 25, r0);
  const double e2 = trotter_error(mixed, fast, 2e-4, 50, r0);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("noiseless evolution is unitary; noise only lowers purity") {
  const SpinSystem s = two_propanol().without({"HS3", "HS4", "HS5", "HS6"});
  const DiagonalHamiltonian h = build_hamiltonian(s, carrier_frame(s, "CC", 500.0));
  std::mt19937_64 rng(23);
  const DensityMatrix rho(oracle::random_state(s.dim(), rng));
  const auto free = evolve(rho, h, NoiseSpec::noiseless(s.size()), 1e-4, 50);
  const Matrix u = free_propagator(h, 50 * 1e-4).matrix();
  CHECK(max_abs(free.back().matrix() - u * rho.matrix() * u.adjoint()) < 1e-12);

  const auto noisy = evolve(rho, h, calibrate_rates(preset_sample(2), s), 1e-4, 200);
  for (std::size_t k = 1; k < noisy.size(); ++k) {
    CHECK(noisy[k].purity() <= noisy[k - 1].purity() + 1e-15);
    if (k % 25 == 0) CHECK(check_state(noisy[k].matrix()).ok(1e-12));
  }
}

TEST_CASE("step-size guard") {
  const SpinSystem s = oracle::three_carbons();
  const DiagonalHamiltonian h = build_hamiltonian(s, resonance_frame(s));
  const NoiseSpec noise{{100.0, 1.0, 1.0}};
  CHECK_NOTHROW(Evolver(h, noise, 5e-4));
  CHECK_THROWS_AS(Evolver(h, noise, 6e-4), std::invalid_argument);
  CHECK_THROWS_AS(Evolver(h, NoiseSpec{{1.0, 1.0}}, 1e-4), std::invalid_argument);
  // propagate refines its step to honour the guard.
  Matrix rho = DensityMatrix::maximally_mixed(3).matrix();
  std::size_t calls = 0;
  propagate(rho, h, noise, 1e-2, 1.0, [&](const Matrix&, std::size_t) { ++calls; });
  CHECK(calls == 20);
}
