#pragma once

// Self-check suites run by `dfshift verify`. Each check compares the main
// pipeline against the dense fermionic reference or a finite-difference
// derivative and reports the worst deviation seen.

#include "dfshift/cost.hpp"
#include "dfshift/factorization.hpp"
#include "dfshift/fermi_oracle.hpp"
#include "dfshift/synthetic.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dfshift::verify {

enum class Level { Fast, Full };

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_deviation <= tolerance; }
};

using ShiftFunction = std::function<Hamiltonian(const Hamiltonian&, const ShiftParams&)>;

inline double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double max_spectrum_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Worst deviation from the canonical anticommutation relations at N.
inline double anticommutation_deviation(std::size_t n) {
  using namespace oracle;
  std::vector<DenseOperator> a, ad;
  for (Spin s : {Spin::Alpha, Spin::Beta})
    for (std::size_t j = 0; j < n; ++j) {
      a.push_back(ladder_operator(j, s, false, n));
      ad.push_back(ladder_operator(j, s, true, n));
    }
  const DenseOperator id = identity(n);
  double worst = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    worst = std::max(worst, max_abs((a[p] * a[p]).matrix));
    for (std::size_t q = 0; q < a.size(); ++q) {
      const DenseOperator aa = a[p] * a[q] + a[q] * a[p];
      const DenseOperator aad = a[p] * ad[q] + ad[q] * a[p];
      worst = std::max(worst, max_abs(aa.matrix));
      worst = std::max(worst, max_abs(p == q ? (aad - id).matrix : aad.matrix));
    }
  }
  return worst;
}

/// B^2 = 0, {B, B+} = I and V = 2 B+B - I unitary for random unit u.
inline std::vector<CheckResult> b_operator_checks(std::size_t n, synthetic::Rng& rng, int samples) {
  using namespace oracle;
  CheckResult nil{"B nilpotency N=" + std::to_string(n), 0.0, 1e-9};
  CheckResult anti{"B anticommutator N=" + std::to_string(n), 0.0, 1e-9};
  CheckResult unit{"V unitarity N=" + std::to_string(n), 0.0, 1e-9};
  const DenseOperator id = identity(n);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd u = synthetic::random_unit_vector(n, rng);
    for (Spin sp : {Spin::Alpha, Spin::Beta}) {
      const DenseOperator b = b_operator(u, sp, n);
      const DenseOperator bd = b.adjoint();
      nil.max_deviation = std::max(nil.max_deviation, max_abs((b * b).matrix));
      anti.max_deviation = std::max(anti.max_deviation, max_abs((b * bd + bd * b - id).matrix));
      const DenseOperator v = cplx(2.0) * (bd * b) - id;
      unit.max_deviation = std::max(unit.max_deviation, max_abs((v * v.adjoint() - id).matrix));
    }
  }
  return {nil, anti, unit};
}

/// Sector spectra of H and shift(H, s) on n_e electrons.
inline double bliss_deviation(const Hamiltonian& H, const ShiftParams& s, const ShiftFunction& shift) {
  const auto hd = oracle::build_hamiltonian_dense(H);
  const auto sd = oracle::build_hamiltonian_dense(shift(H, s));
  return max_spectrum_gap(oracle::sector_eigenvalues(hd, s.n_e), oracle::sector_eigenvalues(sd, s.n_e));
}

/// Central differences of f along each coordinate of x.
template <typename F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd out(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y(i) = x(i) + step;
    const double fp = f(y);
    y(i) = x(i) - step;
    const double fm = f(y);
    y(i) = x(i);
    out(i) = (fp - fm) / (2.0 * step);
  }
  return out;
}

/// Largest relative error between the analytic packed gradient and central
/// differences, over components whose magnitude exceeds `floor`.
inline double gradient_relative_error(const Hamiltonian& H, const ShiftedFactorization& p, double c_approx,
                                      double step = 1e-5, double floor = 1e-6) {
  const ShiftedCostModel model(H);
  const std::size_t n = H.n_orbitals(), R = p.factors.rank();
  const Eigen::VectorXd x = packing::pack(p);
  const Eigen::VectorXd analytic = packing::pack_gradient(model.gradient(p, c_approx));
  const Eigen::VectorXd numeric = central_difference(
      [&](const Eigen::VectorXd& y) { return model.evaluate(packing::unpack(y, n, R), c_approx).total; }, x, step);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::max(std::abs(analytic(i)), std::abs(numeric(i)));
    if (mag <= floor) continue;
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / mag);
  }
  return worst;
}

inline std::vector<CheckResult> run(Level level, const ShiftFunction& shift = apply_symmetry_shift,
                                    std::uint64_t seed = 20240611) {
  synthetic::Rng rng(seed);
  const std::size_t max_n = level == Level::Fast ? 2 : 3;
  std::vector<CheckResult> out;

  CheckResult anti{"anticommutation relations", 0.0, 1e-9};
  for (std::size_t n = 1; n <= max_n; ++n) anti.max_deviation = std::max(anti.max_deviation, anticommutation_deviation(n));
  out.push_back(anti);

  for (std::size_t n = 1; n <= max_n; ++n) {
    for (auto& c : b_operator_checks(n, rng, 3)) out.push_back(std::move(c));
  }

  CheckResult one{"one-body identity One(A) = sum lambda B+B", 0.0, 1e-9};
  CheckResult trace{"trace identity tr A = sum lambda", 0.0, 1e-9};
  for (std::size_t n = 1; n <= max_n; ++n)
    for (int s = 0; s < 3; ++s) {
      const OneBodyMatrix a(synthetic::random_symmetric(n, rng));
      one.max_deviation = std::max(one.max_deviation, oracle::verify_one_body_identity(a));
      double sum = 0.0;
      for (double l : eigen_rank1(a).eigenvalues) sum += l;
      trace.max_deviation = std::max(trace.max_deviation, std::abs(sum - a.trace()));
    }
  out.push_back(one);
  out.push_back(trace);

  CheckResult bliss{"BLISS invariance", 0.0, 1e-9};
  for (std::size_t n = 1; n <= max_n; ++n)
    for (std::size_t n_e = 0; n_e <= 2 * n; ++n_e) {
      const Hamiltonian H = synthetic::random_hamiltonian(n, n_e, rng);
      bliss.max_deviation = std::max(bliss.max_deviation, bliss_deviation(H, synthetic::random_shift(n, n_e, rng), shift));
    }
  out.push_back(bliss);

  if (level == Level::Full) {
    CheckResult grad{"gradient vs central differences", 0.0, 1e-5};
    for (std::size_t n : {3u, 4u}) {
      for (std::size_t R : {2u, 3u}) {
        const Hamiltonian H = synthetic::random_hamiltonian(n, n, rng);
        grad.max_deviation =
            std::max(grad.max_deviation, gradient_relative_error(H, synthetic::random_point(n, R, rng), 1.0));
      }
    }
    out.push_back(grad);
  }
  return out;
}

}  // namespace dfshift::verify
