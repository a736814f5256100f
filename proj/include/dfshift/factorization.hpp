#pragma once

#include "dfshift/hamiltonian.hpp"
#include "dfshift/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfshift {

/// The (ij),(kl) reshape of g has eigenvalues below -tolerance * max|d|.
class IndefiniteTensorError : public std::runtime_error {
 public:
  IndefiniteTensorError(double min_eig, double max_abs)
      : std::runtime_error("two-body supermatrix is indefinite: eigenvalue " + std::to_string(min_eig) +
                           " vs scale " + std::to_string(max_abs)),
        min_eigenvalue(min_eig),
        scale(max_abs) {}
  double min_eigenvalue;
  double scale;
};

/// A = sum_t eigenvalues[t] * vectors[t] vectors[t]^T.
struct Rank1Decomposition {
  std::vector<double> eigenvalues;
  std::vector<Eigen::VectorXd> vectors;

  Eigen::MatrixXd reconstruct() const {
    if (vectors.empty()) return {};
    const auto n = vectors.front().size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < vectors.size(); ++t) a += eigenvalues[t] * vectors[t] * vectors[t].transpose();
    return a;
  }
};

struct LambdaBreakdown {
  double lambda_total = 0.0;
  double two_body_part = 0.0;  // (1/2) sum_r Lambda_r^2
  double one_body_part = 0.0;  // Lambda_{-1}
  std::vector<double> per_factor;
};

/// Relative threshold below which negative supermatrix eigenvalues are noise.
inline constexpr double kIndefiniteTolerance = 1e-8;

namespace detail {

// Flips v so that its first nonzero entry is positive.
inline void canonical_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

inline bool lexicographically_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Orthonormal map from packed symmetric pairs (i >= j) to row-major N^2
// vectorization: off-diagonal pairs carry weight 1/sqrt(2) on both mirrors.
inline Eigen::MatrixXd symmetric_embedding(std::size_t n) {
  const std::size_t m = n * (n + 1) / 2;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n * n, m);
  const double w = std::sqrt(0.5);
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j, ++p) {
      if (i == j) {
        t(i * n + i, p) = 1.0;
      } else {
        t(i * n + j, p) = w;
        t(j * n + i, p) = w;
      }
    }
  return t;
}

}  // namespace detail

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted by
/// descending magnitude (ties: larger signed value first, then
/// lexicographically smaller vector). Each vector's first nonzero entry is
/// positive.
inline Rank1Decomposition eigen_rank1(const OneBodyMatrix& A) {
  const std::size_t n = A.n_orbitals();
  Rank1Decomposition out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.matrix());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Eigen::VectorXd> vecs(n);
  for (std::size_t t = 0; t < n; ++t) {
    vecs[t] = es.eigenvectors().col(static_cast<Eigen::Index>(t));
    detail::canonical_sign(vecs[t]);
  }
  const auto& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double x = ev(static_cast<Eigen::Index>(a)), y = ev(static_cast<Eigen::Index>(b));
    if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
    if (x != y) return x > y;
    return detail::lexicographically_less(vecs[a], vecs[b]);
  });
  for (std::size_t t : order) {
    out.eigenvalues.push_back(ev(static_cast<Eigen::Index>(t)));
    out.vectors.push_back(vecs[t]);
  }
  return out;
}

/// Sum of absolute eigenvalues (the singular-value sum for symmetric A).
inline double nuclear_norm(const OneBodyMatrix& A) {
  if (A.n_orbitals() == 0 || A.matrix().isZero(0.0)) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

/// lambda_DF = (1/2) sum_r ||A_r||_*^2 + ||h'||_*.
inline LambdaBreakdown lambda_df(const FactorSet& F, const OneBodyMatrix& h_prime) {
  require_same_dim(F.n_orbitals(), h_prime.n_orbitals(), "lambda_df");
  LambdaBreakdown out;
  out.per_factor.assign(F.rank(), 0.0);
  parallel_for(F.rank(), [&](std::size_t r) { out.per_factor[r] = nuclear_norm(F[r]); });
  for (double l : out.per_factor) out.two_body_part += 0.5 * l * l;
  out.one_body_part = nuclear_norm(h_prime);
  out.lambda_total = out.two_body_part + out.one_body_part;
  return out;
}

/// Standard double factorization: eigendecompose the (ij),(kl) supermatrix of
/// g and keep the R largest eigenpairs, A_r = sqrt(d_r) V_r.
///
/// The eigenproblem is solved on the symmetric-pair subspace, so every factor
/// is exactly symmetric. Eigenvalues within the noise threshold below zero
/// give zero factors, as do ranks beyond N(N+1)/2. R is capped at N^2.
inline FactorSet initial_double_factorization(const TwoBodyTensor& g, std::size_t R) {
  if (R < 1) throw std::invalid_argument("initial_double_factorization: rank must be >= 1");
  const std::size_t n = g.n_orbitals();
  R = std::min(R, n * n);
  const Eigen::MatrixXd t = detail::symmetric_embedding(n);
  Eigen::MatrixXd packed = t.transpose() * g.supermatrix() * t;
  packed = 0.5 * (packed + packed.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(packed);
  const Eigen::VectorXd& d = es.eigenvalues();  // ascending
  const double scale = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
  if (d.size() && d(0) < -kIndefiniteTolerance * scale) throw IndefiniteTensorError(d(0), scale);

  std::vector<OneBodyMatrix> factors;
  factors.reserve(R);
  const auto m = static_cast<std::size_t>(d.size());
  for (std::size_t r = 0; r < R; ++r) {
    if (r >= m) {
      factors.emplace_back(n);
      continue;
    }
    const auto col = static_cast<Eigen::Index>(m - 1 - r);
    const double dr = std::max(d(col), 0.0);
    if (dr == 0.0) {
      factors.emplace_back(n);
      continue;
    }
    Eigen::VectorXd v = t * es.eigenvectors().col(col);
    detail::canonical_sign(v);
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = v(i * n + j);
    factors.emplace_back(std::sqrt(dr) * a);
  }
  return FactorSet(n, std::move(factors));
}

}  // namespace dfshift
