#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfshift {

/// Thrown when two operands disagree on the number of orbitals.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DimensionError(std::string(where) + ": orbital count mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

/// Real symmetric N x N matrix in Hartree. Construction symmetrizes.
class OneBodyMatrix {
 public:
  OneBodyMatrix() = default;
  explicit OneBodyMatrix(std::size_t n) : m_(Eigen::MatrixXd::Zero(n, n)) {}

  explicit OneBodyMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("OneBodyMatrix: matrix is not square");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("OneBodyMatrix: non-finite entry");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static OneBodyMatrix identity(std::size_t n) {
    return OneBodyMatrix(Eigen::MatrixXd::Identity(n, n));
  }

  std::size_t n_orbitals() const { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const { return m_; }

  /// Sets entry (i, j) and its mirror.
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  double trace() const { return m_.trace(); }

  friend bool operator==(const OneBodyMatrix& a, const OneBodyMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

/// Dense N^4 two-body tensor g_ijkl with 8-fold index symmetry.
///
/// Storage is row-major in (i, j, k, l); the (ij),(kl) reshape is therefore
/// a symmetric N^2 x N^2 matrix accessible through `supermatrix()`.
class TwoBodyTensor {
 public:
  TwoBodyTensor() = default;
  explicit TwoBodyTensor(std::size_t n)
      : n_(n), data_(Eigen::MatrixXd::Zero(n * n, n * n)) {}

  /// Builds from an arbitrary N^2 x N^2 supermatrix, projecting onto the
  /// 8-fold symmetric subspace.
  static TwoBodyTensor from_supermatrix(std::size_t n, const Eigen::MatrixXd& m) {
    if (static_cast<std::size_t>(m.rows()) != n * n ||
        static_cast<std::size_t>(m.cols()) != n * n) {
      throw DimensionError("TwoBodyTensor: supermatrix has wrong shape");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("TwoBodyTensor: non-finite entry");
    }
    TwoBodyTensor t(n);
    t.data_ = m;
    t.symmetrize();
    return t;
  }

  std::size_t n_orbitals() const { return n_; }

  static std::size_t pair(std::size_t n, std::size_t i, std::size_t j) { return i * n + j; }

  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_(pair(n_, i, j), pair(n_, k, l));
  }

  /// Writes v into all eight symmetry images of (i, j, k, l).
  void set(std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
      for (auto [c, d] : {std::pair{k, l}, std::pair{l, k}}) {
        data_(pair(n_, a, b), pair(n_, c, d)) = v;
        data_(pair(n_, c, d), pair(n_, a, b)) = v;
      }
    }
  }

  const Eigen::MatrixXd& supermatrix() const { return data_; }

  double squared_norm() const { return data_.squaredNorm(); }

  /// Largest deviation between any entry and its symmetry images.
  double symmetry_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          for (std::size_t l = 0; l < n_; ++l) {
            const double v = (*this)(i, j, k, l);
            worst = std::max({worst, std::abs(v - (*this)(j, i, k, l)),
                              std::abs(v - (*this)(i, j, l, k)),
                              std::abs(v - (*this)(k, l, i, j))});
          }
    return worst;
  }

  friend bool operator==(const TwoBodyTensor& a, const TwoBodyTensor& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

 private:
  void symmetrize() {
    Eigen::MatrixXd s = 0.5 * (data_ + data_.transpose());
    Eigen::MatrixXd out(s.rows(), s.cols());
    // The transpose above handles (ij)<->(kl); average the remaining swaps.
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          for (std::size_t l = 0; l < n_; ++l) {
            // Sorting makes the average identical for every image of the
            // orbit; pairwise halving keeps symmetric input bit-exact.
            std::array<double, 4> x{s(pair(n_, i, j), pair(n_, k, l)), s(pair(n_, j, i), pair(n_, k, l)),
                                    s(pair(n_, i, j), pair(n_, l, k)), s(pair(n_, j, i), pair(n_, l, k))};
            std::sort(x.begin(), x.end());
            out(pair(n_, i, j), pair(n_, k, l)) = 0.5 * (0.5 * (x[0] + x[1]) + 0.5 * (x[2] + x[3]));
          }
    data_ = std::move(out);
  }

  std::size_t n_ = 0;
  Eigen::MatrixXd data_;
};

/// Ordered list of R symmetric N x N rank-2 factors A_r.
class FactorSet {
 public:
  FactorSet() = default;
  explicit FactorSet(std::size_t n) : n_(n) {}
  FactorSet(std::size_t n, std::vector<OneBodyMatrix> factors) : n_(n), factors_(std::move(factors)) {
    for (const auto& f : factors_) require_same_dim(f.n_orbitals(), n_, "FactorSet");
    if (factors_.size() > n_ * n_) {
      throw std::invalid_argument("FactorSet: more than N^2 factors");
    }
  }

  std::size_t n_orbitals() const { return n_; }
  std::size_t rank() const { return factors_.size(); }
  bool empty() const { return factors_.empty(); }
  const OneBodyMatrix& operator[](std::size_t r) const { return factors_[r]; }
  const std::vector<OneBodyMatrix>& factors() const { return factors_; }

  /// Factors as columns of an N^2 x R matrix (row-major flattening of each A_r).
  Eigen::MatrixXd stacked() const {
    Eigen::MatrixXd w(n_ * n_, factors_.size());
    for (std::size_t r = 0; r < factors_.size(); ++r) {
      const auto& a = factors_[r].matrix();
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) w(i * n_ + j, r) = a(i, j);
    }
    return w;
  }

  friend bool operator==(const FactorSet& a, const FactorSet& b) {
    return a.n_ == b.n_ && a.factors_ == b.factors_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<OneBodyMatrix> factors_;
};

}  // namespace dfshift
