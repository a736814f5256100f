#pragma once

#include "dfshift/tensor.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfshift {

/// H = c + sum_ij h_ij E_ij + sum_ijkl g_ijkl E_ij E_kl, restricted to
/// states with n_electrons electrons.
struct Hamiltonian {
  OneBodyMatrix h;
  TwoBodyTensor g;
  double core_constant = 0.0;
  std::size_t n_electrons = 0;

  Hamiltonian() = default;
  Hamiltonian(OneBodyMatrix h_, TwoBodyTensor g_, double core, std::size_t n_e)
      : h(std::move(h_)), g(std::move(g_)), core_constant(core), n_electrons(n_e) {
    require_same_dim(h.n_orbitals(), g.n_orbitals(), "Hamiltonian");
    if (n_electrons > 2 * h.n_orbitals()) {
      throw std::invalid_argument("Hamiltonian: n_electrons " + std::to_string(n_electrons) +
                                  " exceeds 2N = " + std::to_string(2 * h.n_orbitals()));
    }
  }

  std::size_t n_orbitals() const { return h.n_orbitals(); }
};

/// Parameters of the shift H -> H + (sum xi_ij E_ij + kappa)(N_e - n_e).
struct ShiftParams {
  double kappa = 0.0;
  OneBodyMatrix xi;
  std::size_t n_e = 0;

  static ShiftParams zero(std::size_t n_orbitals, std::size_t n_e) {
    return {0.0, OneBodyMatrix(n_orbitals), n_e};
  }
};

/// Rewrites H + (xi.E + kappa)(N_e - n_e) in the original operator form:
///   h~ = h - n_e xi + kappa I
///   g~_ijkl = g_ijkl + (xi_ij d_kl + d_ij xi_kl) / 2
///   c~ = c - kappa n_e
/// The result acts identically to H on the n_e-electron sector.
inline Hamiltonian apply_symmetry_shift(const Hamiltonian& H, const ShiftParams& s) {
  const std::size_t n = H.n_orbitals();
  require_same_dim(s.xi.n_orbitals(), n, "apply_symmetry_shift");
  const double ne = static_cast<double>(s.n_e);

  Eigen::MatrixXd h = H.h.matrix() - ne * s.xi.matrix();
  h.diagonal().array() += s.kappa;

  Eigen::MatrixXd g = H.g.supermatrix();
  const auto& xi = s.xi.matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t ij = TwoBodyTensor::pair(n, i, j);
        const std::size_t kk = TwoBodyTensor::pair(n, k, k);
        g(ij, kk) += 0.5 * xi(i, j);
        g(kk, ij) += 0.5 * xi(i, j);
      }

  Hamiltonian out;
  out.h = OneBodyMatrix(h);
  out.g = TwoBodyTensor::from_supermatrix(n, g);
  out.core_constant = H.core_constant - s.kappa * ne;
  out.n_electrons = H.n_electrons;
  return out;
}

/// h'_ij = h_ij + 2 sum_k g_ijkk, the one-body matrix that is block encoded
/// once the two-body squares are expanded.
inline OneBodyMatrix effective_one_body(const Hamiltonian& H) {
  const std::size_t n = H.n_orbitals();
  Eigen::MatrixXd hp = H.h.matrix();
  const auto& g = H.g.supermatrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g(TwoBodyTensor::pair(n, i, j), TwoBodyTensor::pair(n, k, k));
      hp(i, j) += 2.0 * acc;
    }
  return OneBodyMatrix(hp);
}

/// sum_r A_r (x) A_r.
inline TwoBodyTensor reconstruct_two_body(const FactorSet& F) {
  const std::size_t n = F.n_orbitals();
  if (F.empty()) return TwoBodyTensor(n);
  const Eigen::MatrixXd w = F.stacked();
  return TwoBodyTensor::from_supermatrix(n, w * w.transpose());
}

/// Squared Frobenius residual sum_ijkl (g - sum_r A_r (x) A_r)^2.
inline double frobenius_error(const TwoBodyTensor& g_target, const FactorSet& F) {
  require_same_dim(g_target.n_orbitals(), F.n_orbitals(), "frobenius_error");
  if (F.empty()) return g_target.squared_norm();
  const Eigen::MatrixXd w = F.stacked();
  return (g_target.supermatrix() - w * w.transpose()).squaredNorm();
}

}  // namespace dfshift
