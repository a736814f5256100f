#pragma once

#include "dfshift/factorization.hpp"
#include "dfshift/hamiltonian.hpp"
#include "dfshift/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cstddef>
#include <vector>

namespace dfshift {

/// Optimization variables: shift (kappa, xi) and the rank-2 factors.
struct ShiftedFactorization {
  double kappa = 0.0;
  OneBodyMatrix xi;
  FactorSet factors;

  std::size_t n_orbitals() const { return xi.n_orbitals(); }
  ShiftParams shift(std::size_t n_e) const { return {kappa, xi, n_e}; }
};

struct CostValue {
  double total = 0.0;
  double err = 0.0;
  double lambda = 0.0;
};

/// Gradient with respect to every matrix entry treated as independent.
/// For symmetric arguments these matrices are symmetric.
struct ParameterGradient {
  double kappa = 0.0;
  Eigen::MatrixXd xi;
  std::vector<Eigen::MatrixXd> factors;
};

/// Precomputed pieces of H reused across cost evaluations.
class ShiftedCostModel {
 public:
  explicit ShiftedCostModel(const Hamiltonian& H)
      : n_(H.n_orbitals()),
        n_e_(static_cast<double>(H.n_electrons)),
        g_(H.g.supermatrix()),
        h_prime_(effective_one_body(H).matrix()),
        vec_identity_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_ * n_))) {
    for (std::size_t i = 0; i < n_; ++i) vec_identity_(static_cast<Eigen::Index>(i * n_ + i)) = 1.0;
  }

  std::size_t n_orbitals() const { return n_; }

  /// g~ = g + (vec(xi) vec(I)^T + vec(I) vec(xi)^T) / 2 as a supermatrix.
  Eigen::MatrixXd shifted_two_body(const OneBodyMatrix& xi) const {
    const Eigen::VectorXd x = vec(xi.matrix());
    Eigen::MatrixXd g = g_;
    g.noalias() += 0.5 * (x * vec_identity_.transpose() + vec_identity_ * x.transpose());
    return g;
  }

  /// h~' = h' + (N - n_e) xi + (kappa + tr xi) I.
  Eigen::MatrixXd shifted_effective_one_body(double kappa, const OneBodyMatrix& xi) const {
    Eigen::MatrixXd h = h_prime_ + (static_cast<double>(n_) - n_e_) * xi.matrix();
    h.diagonal().array() += kappa + xi.trace();
    return h;
  }

  CostValue evaluate(const ShiftedFactorization& p, double c_approx) const {
    check(p);
    CostValue out;
    out.err = residual(p).squaredNorm();
    std::vector<double> lam(p.factors.rank(), 0.0);
    parallel_for(p.factors.rank(), [&](std::size_t r) { lam[r] = nuclear_norm(p.factors[r]); });
    double two_body = 0.0;
    for (double l : lam) two_body += 0.5 * l * l;
    out.lambda = two_body + nuclear_norm(OneBodyMatrix(shifted_effective_one_body(p.kappa, p.xi)));
    out.total = c_approx * out.err + out.lambda;
    return out;
  }

  /// Analytic (sub)gradient of evaluate().total, using sign(0) = 0 for the
  /// nuclear norms.
  ParameterGradient gradient(const ShiftedFactorization& p, double c_approx) const {
    check(p);
    const std::size_t R = p.factors.rank();
    const Eigen::MatrixXd d = residual(p);
    ParameterGradient grad;

    // d Err / d A_r = -4 (D : A_r)
    grad.factors.resize(R);
    const Eigen::MatrixXd da = R ? Eigen::MatrixXd(-4.0 * c_approx * (d * p.factors.stacked()))
                                 : Eigen::MatrixXd(n_ * n_, 0);
    parallel_for(R, [&](std::size_t r) {
      Eigen::MatrixXd gr = unvec(da.col(static_cast<Eigen::Index>(r)));
      const auto [norm, sign] = nuclear_subgradient(p.factors[r].matrix());
      gr += norm * sign;
      grad.factors[r] = gr;
    });

    // Err: d/d xi_ab = 2 sum_k D_abkk. lambda: through h~'.
    const auto [h_norm, h_sign] = nuclear_subgradient(shifted_effective_one_body(p.kappa, p.xi));
    (void)h_norm;
    const double tr_sign = h_sign.trace();
    grad.kappa = tr_sign;
    grad.xi = 2.0 * c_approx * unvec(d * vec_identity_);
    grad.xi += (static_cast<double>(n_) - n_e_) * h_sign;
    grad.xi.diagonal().array() += tr_sign;
    grad.xi = 0.5 * (grad.xi + grad.xi.transpose()).eval();
    return grad;
  }

 private:
  void check(const ShiftedFactorization& p) const {
    require_same_dim(p.xi.n_orbitals(), n_, "shifted cost (xi)");
    require_same_dim(p.factors.n_orbitals(), n_, "shifted cost (factors)");
  }

  Eigen::MatrixXd residual(const ShiftedFactorization& p) const {
    Eigen::MatrixXd d = shifted_two_body(p.xi);
    if (!p.factors.empty()) {
      const Eigen::MatrixXd w = p.factors.stacked();
      d.noalias() -= w * w.transpose();
    }
    return d;
  }

  Eigen::VectorXd vec(const Eigen::MatrixXd& m) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n_ * n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) v(static_cast<Eigen::Index>(i * n_ + j)) = m(i, j);
    return v;
  }

  Eigen::MatrixXd unvec(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = v(static_cast<Eigen::Index>(i * n_ + j));
    return m;
  }

  // (||A||_*, sum_t sign(l_t) u_t u_t^T)
  static std::pair<double, Eigen::MatrixXd> nuclear_subgradient(const Eigen::MatrixXd& a) {
    const auto n = a.rows();
    if (a.isZero(0.0)) return {0.0, Eigen::MatrixXd::Zero(n, n)};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd& ev = es.eigenvalues();
    Eigen::VectorXd s(n);
    for (Eigen::Index t = 0; t < n; ++t) s(t) = ev(t) > 0.0 ? 1.0 : (ev(t) < 0.0 ? -1.0 : 0.0);
    const Eigen::MatrixXd& v = es.eigenvectors();
    return {ev.cwiseAbs().sum(), v * s.asDiagonal() * v.transpose()};
  }

  std::size_t n_;
  double n_e_;
  Eigen::MatrixXd g_;
  Eigen::MatrixXd h_prime_;
  Eigen::VectorXd vec_identity_;
};

/// Total = c_approx * Err + lambda for the shifted Hamiltonian H~(kappa, xi).
inline CostValue total_cost(const Hamiltonian& H, const ShiftedFactorization& p, double c_approx) {
  return ShiftedCostModel(H).evaluate(p, c_approx);
}

inline ParameterGradient gradient(const Hamiltonian& H, const ShiftedFactorization& p, double c_approx) {
  return ShiftedCostModel(H).gradient(p, c_approx);
}

/// Flat parameter layout used by the optimizer: kappa, then the upper
/// triangle (row-major, i <= j) of xi, then the upper triangle of each A_r.
namespace packing {

inline std::size_t triangle_size(std::size_t n) { return n * (n + 1) / 2; }

inline std::size_t size(std::size_t n, std::size_t R) { return 1 + (R + 1) * triangle_size(n); }

inline void put_triangle(const Eigen::MatrixXd& m, Eigen::VectorXd& out, std::size_t& pos) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j) out(static_cast<Eigen::Index>(pos++)) = m(i, j);
}

inline Eigen::MatrixXd take_triangle(const Eigen::VectorXd& v, std::size_t n, std::size_t& pos) {
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double x = v(static_cast<Eigen::Index>(pos++));
      m(i, j) = x;
      m(j, i) = x;
    }
  return m;
}

inline Eigen::VectorXd pack(const ShiftedFactorization& p) {
  const std::size_t n = p.n_orbitals();
  Eigen::VectorXd v(static_cast<Eigen::Index>(size(n, p.factors.rank())));
  std::size_t pos = 0;
  v(static_cast<Eigen::Index>(pos++)) = p.kappa;
  put_triangle(p.xi.matrix(), v, pos);
  for (const auto& a : p.factors.factors()) put_triangle(a.matrix(), v, pos);
  return v;
}

inline ShiftedFactorization unpack(const Eigen::VectorXd& v, std::size_t n, std::size_t R) {
  ShiftedFactorization p;
  std::size_t pos = 0;
  p.kappa = v(static_cast<Eigen::Index>(pos++));
  p.xi = OneBodyMatrix(take_triangle(v, n, pos));
  std::vector<OneBodyMatrix> fs;
  fs.reserve(R);
  for (std::size_t r = 0; r < R; ++r) fs.emplace_back(take_triangle(v, n, pos));
  p.factors = FactorSet(n, std::move(fs));
  return p;
}

/// Chain rule onto the packed layout: an off-diagonal parameter moves both
/// mirrored entries, so its derivative is G_ij + G_ji.
inline Eigen::VectorXd pack_gradient(const ParameterGradient& g) {
  const auto n = static_cast<std::size_t>(g.xi.rows());
  Eigen::VectorXd v(static_cast<Eigen::Index>(size(n, g.factors.size())));
  std::size_t pos = 0;
  v(static_cast<Eigen::Index>(pos++)) = g.kappa;
  auto put = [&](const Eigen::MatrixXd& m) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) v(static_cast<Eigen::Index>(pos++)) = i == j ? m(i, i) : m(i, j) + m(j, i);
  };
  put(g.xi);
  for (const auto& f : g.factors) put(f);
  return v;
}

}  // namespace packing

}  // namespace dfshift
