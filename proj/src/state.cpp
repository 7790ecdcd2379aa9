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

#include "starsense/state.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace starsense {

Matrix2 pauli(Axis axis) {
  Matrix2 m;
  switch (axis) {
    case Axis::x: m << 0, 1, 1, 0; break;
    case Axis::y: m << 0, -kI, kI, 0; break;
    case Axis::z: m << 1, 0, 0, -1; break;
    case Axis::identity: m << 1, 0, 0, 1; break;
  }
  return m;
}

Matrix embed(std::size_t n_spins, std::span<const std::size_t> factors, const Matrix& local) {
  const std::size_t k = factors.size();
  if (local.rows() != (Eigen::Index{1} << k) || local.cols() != local.rows()) {
    throw std::invalid_argument("embed: local operator size does not match factor count");
  }
  std::size_t factor_mask = 0;
  for (auto f : factors) {
    if (f >= n_spins) throw std::invalid_argument("embed: factor out of range");
    factor_mask |= spin_mask(n_spins, f);
  }
  const std::size_t dim = std::size_t{1} << n_spins;
  auto local_index = [&](std::size_t full) {
    std::size_t idx = 0;
    for (std::size_t q = 0; q < k; ++q) {
      idx = (idx << 1) | ((full & spin_mask(n_spins, factors[q])) ? 1u : 0u);
    }
    return idx;
  };
  Matrix out = Matrix::Zero(dim, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const auto lc = local_index(c);
    for (std::size_t r = 0; r < dim; ++r) {
      if ((r & ~factor_mask) != (c & ~factor_mask)) continue;
      out(r, c) = local(local_index(r), lc);
    }
  }
  return out;
}

Operator::Operator(Matrix m, bool unitary) : m_(std::move(m)), unitary_(unitary) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("operator must be square");
  if (unitary_) {
    const double err = (m_ * m_.adjoint() - Matrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff();
    if (err > kUnitaryTolerance) {
      throw std::invalid_argument("operator flagged unitary but |UU^+ - I| = " + std::to_string(err));
    }
  }
}

Operator Operator::adjoint() const { return Operator(m_.adjoint(), unitary_); }

Operator Operator::operator*(const Operator& rhs) const {
  if (dim() != rhs.dim()) throw std::invalid_argument("operator dimension mismatch");
  Operator out(m_ * rhs.m_, false);
  out.unitary_ = unitary_ && rhs.unitary_;
  return out;
}

Operator embed_pauli(const SpinSystem& system, std::string_view spin, Axis axis) {
  const std::size_t idx = system.index_of(spin);
  const std::size_t factors[] = {idx};
  return Operator(embed(system.size(), factors, pauli(axis)), true);
}

StateCheck check_state(const Matrix& rho, double eigenvalue_floor, bool check_positivity) {
  StateCheck check;
  check.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  check.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  if (check_positivity) {
    Matrix shifted = 0.5 * (rho + rho.adjoint());
    shifted.diagonal().array() -= eigenvalue_floor;
    Eigen::LLT<Matrix> llt(shifted);
    check.eigenvalue_floor_ok = llt.info() == Eigen::Success;
  }
  return check;
}

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 2 || (m_.rows() & (m_.rows() - 1)) != 0) {
    throw std::invalid_argument("density matrix must be 2^n x 2^n");
  }
  const auto check = check_state(m_, 0.0, false);
  if (check.hermiticity_error > kTolerance) {
    throw std::invalid_argument("density matrix not Hermitian (err " +
                                std::to_string(check.hermiticity_error) + ")");
  }
  if (check.trace_error > kTolerance) {
    throw std::invalid_argument("density matrix trace != 1 (err " +
                                std::to_string(check.trace_error) + ")");
  }
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t n_spins) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_spins);
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

std::size_t DensityMatrix::n_spins() const {
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dim()) ++n;
  return n;
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

DensityMatrix partial_trace(const DensityMatrix& rho, const SpinSystem& system,
                            const std::vector<std::string>& keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  if (rho.dim() != system.dim()) throw std::invalid_argument("partial_trace: dimension mismatch");
  const std::size_t n = system.size();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(keep.begin(), keep.end(), system.spin(i).name) != keep.end()) kept.push_back(i);
  }
  for (const auto& label : keep) system.index_of(label);  // unknown labels throw
  std::size_t kept_mask = 0;
  for (auto i : kept) kept_mask |= spin_mask(n, i);
  auto reduced_index = [&](std::size_t full) {
    std::size_t idx = 0;
    for (auto i : kept) idx = (idx << 1) | ((full & spin_mask(n, i)) ? 1u : 0u);
    return idx;
  };
  const auto rdim = static_cast<Eigen::Index>(std::size_t{1} << kept.size());
  Matrix out = Matrix::Zero(rdim, rdim);
  const auto& m = rho.matrix();
  for (std::size_t c = 0; c < rho.dim(); ++c) {
    for (std::size_t r = 0; r < rho.dim(); ++r) {
      if ((r & ~kept_mask) != (c & ~kept_mask)) continue;
      out(reduced_index(r), reduced_index(c)) += m(r, c);
    }
  }
  return DensityMatrix(std::move(out));
}

namespace {

std::vector<std::size_t> carbon_chain(const SpinSystem& system) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto role = system.spin(i).role;
    if (role == SpinRole::center || role == SpinRole::side) out.push_back(i);
  }
  return out;
}

}  // namespace

ThermalState thermal_state(const SpinSystem& system, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("thermal_state: epsilon must be > 0");
  const std::size_t n = system.size();
  const auto chain = carbon_chain(system);
  if (system.indices_with_role(SpinRole::center).size() != 1 || chain.size() < 2) {
    throw std::invalid_argument("thermal_state: need CC and at least one CS");
  }
  const auto dim = static_cast<Eigen::Index>(system.dim());
  Matrix2 polarized = pauli(Axis::identity);
  polarized(0, 0) += epsilon;
  polarized /= 2.0;
  const Matrix2 mixed = pauli(Axis::identity) / 2.0;

  Matrix raw = Matrix::Zero(dim, dim);
  for (auto polarized_spin : chain) {
    Matrix term = Matrix::Ones(1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix2& f = (i == polarized_spin) ? polarized : mixed;
      Matrix next = Eigen::kroneckerProduct(term, f);
      term = std::move(next);
    }
    raw += term;
  }
  const double tr = raw.trace().real();

  Matrix obs = Matrix::Ones(1, 1);
  const auto cc = system.indices_with_role(SpinRole::center).front();
  for (std::size_t i = 0; i < n; ++i) {
    Matrix2 f = mixed;
    if (i == cc) f << 1, 0, 0, 0;
    Matrix next = Eigen::kroneckerProduct(obs, f);
    obs = std::move(next);
  }
  return ThermalState{raw, DensityMatrix(raw / tr), DensityMatrix(std::move(obs))};
}

DensityMatrix prepare_rho_i(const SpinSystem& system) {
  const std::size_t factors[] = {system.index_of("CC"), system.index_of("CS1"),
                                 system.index_of("CS2")};
  const Eigen::Vector2cd plus = Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0);
  Matrix sides = Matrix::Zero(4, 4);
  sides(1, 1) = 0.5;  // |01>
  sides(2, 2) = 0.5;  // |10>
  const Matrix local = Eigen::kroneckerProduct(Matrix(plus * plus.adjoint()), sides);
  const double env = static_cast<double>(std::size_t{1} << (system.size() - 3));
  return DensityMatrix(embed(system.size(), factors, local) / env);
}

}  // namespace starsense
