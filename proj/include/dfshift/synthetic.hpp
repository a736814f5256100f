#pragma once

// Random model Hamiltonians for property checks and demos.

#include "dfshift/cost.hpp"
#include "dfshift/hamiltonian.hpp"

#include <random>

namespace dfshift::synthetic {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd random_symmetric(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = m(j, i) = nd(rng);
  return m;
}

inline Eigen::VectorXd random_unit_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = nd(rng);
  return v.normalized();
}

/// g = sum_{r < terms} B_r (x) B_r with random symmetric B_r, so the
/// supermatrix is positive semidefinite of rank <= terms.
inline TwoBodyTensor random_psd_two_body(std::size_t n, std::size_t terms, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd w(n * n, terms);
  for (std::size_t r = 0; r < terms; ++r) {
    const Eigen::MatrixXd b = random_symmetric(n, rng, scale);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w(i * n + j, r) = b(i, j);
  }
  return TwoBodyTensor::from_supermatrix(n, w * w.transpose());
}

inline Hamiltonian random_hamiltonian(std::size_t n, std::size_t n_e, Rng& rng, double h_scale = 1.0,
                                      double g_scale = 0.3, std::size_t terms = 0) {
  if (terms == 0) terms = n * (n + 1) / 2;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  return Hamiltonian(OneBodyMatrix(random_symmetric(n, rng, h_scale)), random_psd_two_body(n, terms, rng, g_scale),
                     ud(rng), n_e);
}

inline ShiftParams random_shift(std::size_t n, std::size_t n_e, Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> nd(0.0, scale);
  return {nd(rng), OneBodyMatrix(random_symmetric(n, rng, scale)), n_e};
}

inline ShiftedFactorization random_point(std::size_t n, std::size_t R, Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<OneBodyMatrix> fs;
  for (std::size_t r = 0; r < R; ++r) fs.emplace_back(random_symmetric(n, rng, scale));
  return {nd(rng), OneBodyMatrix(random_symmetric(n, rng, scale)), FactorSet(n, std::move(fs))};
}

}  // namespace dfshift::synthetic
