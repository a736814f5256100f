#pragma once

// Dense many-body reference for small orbital counts.
//
// Qubit q = j + N * sigma holds spin-orbital (j, sigma). Basis state b has
// qubit q in |1> (occupied) iff bit q of b is set, i.e. qubit 0 is the least
// significant bit. Operators are built from the Jordan-Wigner Pauli strings
//   a_{j sigma} = Z_0 ... Z_{q-1} (X_q + i Y_q) / 2.

#include "dfshift/factorization.hpp"
#include "dfshift/hamiltonian.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfshift::oracle {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxOrbitals = 6;

enum class Spin : int { Alpha = 0, Beta = 1 };

struct DenseOperator {
  std::size_t n_orbitals = 0;
  Eigen::MatrixXcd matrix;

  std::size_t n_qubits() const { return 2 * n_orbitals; }
  std::size_t dim() const { return std::size_t{1} << n_qubits(); }

  /// max |M - M^dagger|
  double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

  DenseOperator adjoint() const { return {n_orbitals, matrix.adjoint()}; }

  friend DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
    return {a.n_orbitals, a.matrix * b.matrix};
  }
  friend DenseOperator operator+(const DenseOperator& a, const DenseOperator& b) {
    return {a.n_orbitals, a.matrix + b.matrix};
  }
  friend DenseOperator operator-(const DenseOperator& a, const DenseOperator& b) {
    return {a.n_orbitals, a.matrix - b.matrix};
  }
  friend DenseOperator operator*(cplx s, const DenseOperator& a) { return {a.n_orbitals, s * a.matrix}; }
};

inline void check_orbitals(std::size_t n) {
  if (n == 0 || n > kMaxOrbitals) {
    throw std::invalid_argument("dense oracle supports 1 <= N <= " + std::to_string(kMaxOrbitals) + ", got " +
                                std::to_string(n));
  }
}

inline DenseOperator identity(std::size_t n) {
  check_orbitals(n);
  const std::size_t d = std::size_t{1} << (2 * n);
  return {n, Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
}

inline DenseOperator zero(std::size_t n) {
  check_orbitals(n);
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << (2 * n));
  return {n, Eigen::MatrixXcd::Zero(d, d)};
}

namespace pauli {
inline Eigen::Matrix2cd I() { return Eigen::Matrix2cd::Identity(); }
inline Eigen::Matrix2cd X() { Eigen::Matrix2cd m; m << 0, 1, 1, 0; return m; }
inline Eigen::Matrix2cd Y() { Eigen::Matrix2cd m; m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Eigen::Matrix2cd Z() { Eigen::Matrix2cd m; m << 1, 0, 0, -1; return m; }
}  // namespace pauli

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Tensor product with factors[q] acting on qubit q (qubit 0 least significant).
inline Eigen::MatrixXcd pauli_string(const std::vector<Eigen::Matrix2cd>& factors) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (const auto& f : factors) m = kron(f, m);
  return m;
}

inline std::size_t qubit_index(std::size_t j, Spin s, std::size_t n) { return j + n * static_cast<std::size_t>(s); }

/// a_{j sigma} (or its adjoint) as a 2^(2N) x 2^(2N) matrix.
inline DenseOperator ladder_operator(std::size_t j, Spin s, bool dagger, std::size_t n) {
  check_orbitals(n);
  if (j >= n) throw std::out_of_range("ladder_operator: orbital " + std::to_string(j) + " >= N");
  const std::size_t q = qubit_index(j, s, n);
  std::vector<Eigen::Matrix2cd> f(2 * n, pauli::I());
  for (std::size_t p = 0; p < q; ++p) f[p] = pauli::Z();
  const cplx iy = dagger ? cplx(0, -1) : cplx(0, 1);
  f[q] = 0.5 * (pauli::X() + iy * pauli::Y());
  return {n, pauli_string(f)};
}

/// E_ij = sum_sigma a+_{i sigma} a_{j sigma}.
inline DenseOperator excitation_operator(std::size_t i, std::size_t j, std::size_t n) {
  DenseOperator e = zero(n);
  for (Spin s : {Spin::Alpha, Spin::Beta}) e = e + ladder_operator(i, s, true, n) * ladder_operator(j, s, false, n);
  return e;
}

inline DenseOperator number_operator(std::size_t n) {
  DenseOperator out = zero(n);
  for (std::size_t i = 0; i < n; ++i) out = out + excitation_operator(i, i, n);
  return out;
}

/// One(A) = sum_ij A_ij E_ij.
inline DenseOperator one_body_operator(const OneBodyMatrix& a) {
  const std::size_t n = a.n_orbitals();
  DenseOperator out = zero(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) out = out + cplx(a(i, j)) * excitation_operator(i, j, n);
  return out;
}

/// c I + sum h_ij E_ij + sum g_ijkl E_ij E_kl.
inline DenseOperator build_hamiltonian_dense(const Hamiltonian& H) {
  const std::size_t n = H.n_orbitals();
  check_orbitals(n);
  std::vector<DenseOperator> e;
  e.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e.push_back(excitation_operator(i, j, n));

  DenseOperator out = cplx(H.core_constant) * identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (H.h(i, j) != 0.0) out.matrix += H.h(i, j) * e[i * n + j].matrix;
      // sum_kl g_ijkl E_kl, then one product per (i, j).
      Eigen::MatrixXcd inner = Eigen::MatrixXcd::Zero(out.matrix.rows(), out.matrix.cols());
      bool any = false;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          const double gv = H.g(i, j, k, l);
          if (gv == 0.0) continue;
          inner += gv * e[k * n + l].matrix;
          any = true;
        }
      if (any) out.matrix.noalias() += e[i * n + j].matrix * inner;
    }
  return out;
}

/// B_{u sigma} = sum_j u_j a_{j sigma} for a real unit vector u.
inline DenseOperator b_operator(const Eigen::VectorXd& u, Spin s, std::size_t n) {
  check_orbitals(n);
  if (static_cast<std::size_t>(u.size()) != n) throw DimensionError("b_operator: vector length != N");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw std::invalid_argument("b_operator: vector is not unit length");
  DenseOperator out = zero(n);
  for (std::size_t j = 0; j < n; ++j)
    if (u(static_cast<Eigen::Index>(j)) != 0.0)
      out = out + cplx(u(static_cast<Eigen::Index>(j))) * ladder_operator(j, s, false, n);
  return out;
}

/// max-norm of One(A) - sum_{t sigma} lambda_t B+_{u_t sigma} B_{u_t sigma},
/// with (lambda_t, u_t) from eigen_rank1(A).
inline double verify_one_body_identity(const OneBodyMatrix& a) {
  const std::size_t n = a.n_orbitals();
  check_orbitals(n);
  const Rank1Decomposition dec = eigen_rank1(a);
  DenseOperator rhs = zero(n);
  for (std::size_t t = 0; t < dec.eigenvalues.size(); ++t)
    for (Spin s : {Spin::Alpha, Spin::Beta}) {
      const DenseOperator b = b_operator(dec.vectors[t], s, n);
      rhs = rhs + cplx(dec.eigenvalues[t]) * (b.adjoint() * b);
    }
  return (one_body_operator(a).matrix - rhs.matrix).cwiseAbs().maxCoeff();
}

/// Eigenvalues (ascending) of the block spanned by basis states with n_e
/// occupied spin-orbitals.
inline std::vector<double> sector_eigenvalues(const DenseOperator& op, std::size_t n_e) {
  const std::size_t nq = op.n_qubits();
  if (n_e > nq) throw std::invalid_argument("sector_eigenvalues: n_e exceeds 2N");
  std::vector<Eigen::Index> states;
  for (std::size_t b = 0; b < op.dim(); ++b)
    if (static_cast<std::size_t>(std::popcount(b)) == n_e) states.push_back(static_cast<Eigen::Index>(b));
  const auto m = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXcd block(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) block(r, c) = op.matrix(states[r], states[c]);
  block = 0.5 * (block + block.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(out.begin(), out.end());
  return out;
}

/// Full-space spectrum (ascending) of a Hermitian operator.
inline std::vector<double> spectrum(const DenseOperator& op) {
  Eigen::MatrixXcd m = 0.5 * (op.matrix + op.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dfshift::oracle
