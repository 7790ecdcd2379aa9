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
#include "starsense/keyvalue.hpp"

using namespace starsense;

TEST_CASE("quantities accept plain and 2pi forms") {
  CHECK(*parse_quantity("1.5") == 1.5);
  CHECK(*parse_quantity("2pi*38.4") == doctest::Approx(kTwoPi * 38.4));
  CHECK(*parse_quantity("pi*2") == doctest::Approx(kTwoPi));
  CHECK_FALSE(parse_quantity("1.5x"));
  CHECK_FALSE(parse_quantity(""));
  auto list = parse_quantity_list("0, 30 ,50 90");
  REQUIRE(list);
  CHECK(list->size() == 4);
  CHECK((*list)[3] == 90.0);
}

TEST_CASE("key/value documents report the offending line") {
  const auto doc = KeyValueDocument::parse("# c\na = 1\n\nb = x\n", "cfg");
  CHECK(doc.number("a") == 1.0);
  try {
    doc.number("b");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(e.source() == "cfg");
  }
  CHECK_THROWS_AS(KeyValueDocument::parse("novalue\n"), ConfigError);
}

TEST_CASE("built-in 2-propanol carries the measured parameters") {
  const SpinSystem s = two_propanol();
  CHECK(s.size() == 10);
  const auto cc = s.index_of("CC");
  CHECK(s.spin(cc).shift_ppm == 62.6);
  CHECK(s.spin(s.index_of("CS1")).shift_ppm == 25.5);
  CHECK(s.spin(s.index_of("HC")).shift_ppm == 3.78);
  CHECK(s.spin(s.index_of("HS4")).shift_ppm == 1.21);
  CHECK(s.coupling(cc, s.index_of("CS2")) == doctest::Approx(kTwoPi * 38.4));
  CHECK(s.coupling(cc, s.index_of("HC")) == doctest::Approx(kTwoPi * 140));
  CHECK(s.coupling(cc, s.index_of("HS6")) == doctest::Approx(kTwoPi * 4.4));
  CHECK(s.coupling(s.index_of("CS1"), s.index_of("HS2")) == doctest::Approx(kTwoPi * 124));
  CHECK(s.coupling(s.index_of("CS1"), s.index_of("HS5")) == 0.0);
  CHECK(s.coupling(s.index_of("HS1"), s.index_of("HS2")) == 0.0);
  CHECK(s.indices_with_role(SpinRole::side).size() == 2);
  CHECK(s.indices_with_role(SpinRole::side_proton).size() == 6);
  // Couplings are symmetric with a zero diagonal.
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.coupling(i, i) == 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) CHECK(s.coupling(i, j) == s.coupling(j, i));
  }
}

TEST_CASE("roster validation") {
  std::map<std::string, double> refs{{"13C", 100.6e6}};
  CHECK_THROWS_AS(SpinSystem({{"CC", "13C", 1, SpinRole::center}, {"CC", "13C", 2, SpinRole::center}}, {}, refs),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpinSystem({{"CC", "1H", 1, SpinRole::center}}, {}, refs), std::invalid_argument);
  CHECK_THROWS_AS(SpinSystem({{"CC", "13C", 1, SpinRole::center}}, {{"CC", "CC", 1.0}}, refs), std::invalid_argument);
  CHECK_THROWS_AS(SpinSystem({{"CC", "13C", 1, SpinRole::center}, {"CS1", "13C", 2, SpinRole::side}},
                             {{"CC", "CS1", -1.0}}, refs),
                  std::invalid_argument);
  CHECK_THROWS_AS(two_propanol().index_of("XX"), std::invalid_argument);
}

TEST_CASE("molecule files round-trip") {
  const SpinSystem s = two_propanol();
  const SpinSystem back = parse_molecule(format_molecule(s, "2-propanol"));
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back.spin(i).name == s.spin(i).name);
    CHECK(back.spin(i).shift_ppm == s.spin(i).shift_ppm);
    for (std::size_t j = 0; j < s.size(); ++j) CHECK(back.coupling(i, j) == doctest::Approx(s.coupling(i, j)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(parse_molecule("spin = CC 13C\n"), ConfigError);
  CHECK_THROWS_AS(parse_molecule("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_molecule("spin = CC 13C 62.6\n"), ConfigError);  // no reference frequency
}

TEST_CASE("shipped molecule file matches the built-in roster") {
  const SpinSystem file = load_molecule(STARSENSE_DATA_DIR "/molecules/2-propanol.mol");
  const SpinSystem builtin = two_propanol();
  REQUIRE(file.size() == builtin.size());
  for (std::size_t i = 0; i < file.size(); ++i) {
    for (std::size_t j = 0; j < file.size(); ++j) CHECK(file.coupling(i, j) == doctest::Approx(builtin.coupling(i, j)));
  }
}

TEST_CASE("larmor offsets and ppm conversion") {
  const SpinSystem s = two_propanol();
  const auto cc = s.index_of("CC");
  CHECK(s.larmor_rad_s(cc) == doctest::Approx(kTwoPi * 100.6e6 * 62.6e-6));
  CHECK(s.rad_s_to_ppm("13C", s.ppm_to_rad_s("13C", 12.3)) == doctest::Approx(12.3));
}

TEST_CASE("decoupled registers drop spins and their couplings") {
  const SpinSystem s = two_propanol();
  const SpinSystem r = s.without({"HC", "HS1"});
  CHECK(r.size() == 8);
  CHECK_FALSE(r.contains("HC"));
  CHECK(r.coupling(r.index_of("CC"), r.index_of("HS2")) == doctest::Approx(kTwoPi * 4.4));
  const SpinSystem z = s.with_couplings_zeroed({"HC"});
  CHECK(z.size() == 10);
  CHECK(z.coupling(z.index_of("CC"), z.index_of("HC")) == 0.0);
  CHECK(z.coupling(z.index_of("CC"), z.index_of("CS1")) == s.coupling(0, 1));
}

TEST_CASE("embedded Pauli operators match explicit Kronecker products") {
  const SpinSystem s = oracle::three_carbons();
  for (auto axis : {Axis::x, Axis::y, Axis::z}) {
    for (std::size_t k = 0; k < 3; ++k) {
      const Matrix brute = oracle::on_spin(3, k, Matrix(pauli(axis)));
      CHECK((embed_pauli(s, s.spin(k).name, axis).matrix() - brute).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // Multi-factor embedding follows the requested factor order.
  std::mt19937_64 rng(7);
  const Matrix local = oracle::random_unitary(4, rng);
  const std::size_t factors[] = {2, 0};
  const Matrix e = embed(3, factors, local);
  // local acts on (spin2, spin0): its row index is (bit of spin2, bit of spin0).
  Matrix expected = Matrix::Zero(8, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const int lr = (((r >> 0) & 1) << 1) | ((r >> 2) & 1);
      const int lc = (((c >> 0) & 1) << 1) | ((c >> 2) & 1);
      if (((r >> 1) & 1) == ((c >> 1) & 1)) expected(r, c) = local(lr, lc);
    }
  }
  CHECK((e - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("operators flagged unitary are verified") {
  CHECK_NOTHROW(Operator(Matrix::Identity(4, 4), true));
  CHECK_THROWS_AS(Operator(Matrix::Identity(4, 4) * 2.0, true), std::invalid_argument);
}

TEST_CASE("density matrices are validated") {
  CHECK_NOTHROW(DensityMatrix::maximally_mixed(3));
  CHECK(DensityMatrix::maximally_mixed(3).purity() == doctest::Approx(1.0 / 8));
  CHECK_THROWS_AS(DensityMatrix(Matrix::Identity(4, 4)), std::invalid_argument);
  Matrix nonherm = Matrix::Identity(2, 2) / 2.0;
  nonherm(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{nonherm}, std::invalid_argument);
}

TEST_CASE("state checks detect negative eigenvalues") {
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 1.1;
  rho(1, 1) = -0.1;
  const StateCheck c = check_state(rho);
  CHECK(c.trace_error < 1e-15);
  CHECK_FALSE(c.eigenvalue_floor_ok);
  CHECK(check_state(DensityMatrix::maximally_mixed(2).matrix()).ok(1e-12));
}

TEST_CASE("partial trace properties on random states") {
  const SpinSystem s = oracle::three_carbons();
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho(oracle::random_state(8, rng));
    const DensityMatrix a = partial_trace(rho, s, {"CC"});
    CHECK(a.matrix().trace().real() == doctest::Approx(1.0));
    CHECK(check_state(a.matrix()).ok(1e-12));
    // Tracing in two steps equals tracing at once.
    const DensityMatrix ab = partial_trace(rho, s, {"CC", "CS1"});
    const SpinSystem s2 = s.without({"CS2"});
    CHECK((partial_trace(ab, s2, {"CC"}).matrix() - a.matrix()).cwiseAbs().maxCoeff() < 1e-14);
    // Keeping everything is the identity map.
    CHECK((partial_trace(rho, s, {"CC", "CS1", "CS2"}).matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  // Product states factor.
  const Matrix r1 = oracle::random_state(2, rng), r2 = oracle::random_state(2, rng), r3 = oracle::random_state(2, rng);
  const DensityMatrix prod(oracle::kron_all({r1, r2, r3}));
  CHECK((partial_trace(prod, s, {"CS1"}).matrix() - r2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((partial_trace(prod, s, {"CC", "CS2"}).matrix() - oracle::kron_all({r1, r3})).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(partial_trace(prod, s, {}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(prod, s, {"HC"}), std::invalid_argument);
}

TEST_CASE("thermal state of the carbon chain") {
  const SpinSystem s = oracle::three_carbons();
  const double eps = 1e-5;
  const ThermalState t = thermal_state(s, eps);
  // Unnormalised sum of the three polarised-carbon terms.
  CHECK(t.raw.trace().real() == doctest::Approx(3.0 * (1.0 + eps / 2.0) / 1.0).epsilon(1e-12));
  CHECK(t.state.matrix().trace().real() == doctest::Approx(1.0));
  // Deviation from the mixed state is proportional to the summed sz.
  Matrix sz_sum = oracle::sz_op(3, 0) + oracle::sz_op(3, 1) + oracle::sz_op(3, 2);
  const Matrix dev = t.state.matrix() - Matrix::Identity(8, 8) / 8.0;
  const Complex ratio = dev(0, 0) / sz_sum(0, 0);
  CHECK((dev - ratio * sz_sum).cwiseAbs().maxCoeff() < 1e-15);
  // Observable-equivalent state: |0><0| on CC, rest mixed.
  const Matrix obs = oracle::kron_all({Matrix((Matrix(2, 2) << 1, 0, 0, 0).finished()), Matrix::Identity(4, 4) / 4.0});
  CHECK((t.observable_equivalent.matrix() - obs).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(thermal_state(s, 0.0), std::invalid_argument);
}

TEST_CASE("rho_i: |+> on CC with the side pair in the single-excitation mixture") {
  const SpinSystem s = oracle::three_carbons();
  const DensityMatrix r = prepare_rho_i(s);
  CHECK(r.matrix()(0b001, 0b101).real() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.matrix()(0b000, 0b000).real() == 0.0);
  const DensityMatrix cc = partial_trace(r, s, {"CC"});
  CHECK(cc.matrix()(0, 1).real() == doctest::Approx(0.5));
  CHECK(r.purity() == doctest::Approx(0.5));
}
