#pragma once

#include "dfshift/adam.hpp"
#include "dfshift/cost.hpp"
#include "dfshift/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfshift {

struct OptimizationConfig {
  /// Penalty weight on Err. Empty selects the automatic scale
  /// 1e3 * lambda_init / max(Err_init, 1e-12), clamped to [1e2, 1e9].
  std::optional<double> c_approx;
  std::size_t max_iters = 10000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Stop once the best Total improved by less than rel_tol (relative) over
  /// the last `patience` iterations.
  double rel_tol = 1e-7;
  std::size_t patience = 200;
  std::uint64_t seed = 0;
  /// Candidates may exceed the initial Err by at most this much.
  double err_budget = 1e-5;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("OptimizationConfig: " + m); };
    if (c_approx && !(*c_approx > 0.0 && std::isfinite(*c_approx))) fail("c_approx must be positive");
    if (max_iters < 1) fail("max_iters must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in (0, 1)");
    if (!(adam_epsilon >= 0.0)) fail("adam_epsilon must be nonnegative");
    if (!(rel_tol >= 0.0)) fail("rel_tol must be nonnegative");
    if (patience < 1) fail("patience must be positive");
    if (!(err_budget >= 0.0)) fail("err_budget must be nonnegative");
  }
};

/// Which parameter blocks the optimizer may move.
struct ParameterMask {
  bool kappa = true;
  bool xi = true;
  bool factors = true;
};

struct TracePoint {
  std::size_t iter = 0;
  double total = 0.0;
  double err = 0.0;
  double lambda = 0.0;
};

enum class StopReason { MaxIterations, Converged, NonFiniteCost };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iters";
    case StopReason::Converged: return "converged";
    case StopReason::NonFiniteCost: return "non_finite_cost";
  }
  return "unknown";
}

struct OptimizationReport {
  ShiftedFactorization best_params;
  LambdaBreakdown lambda_breakdown;  // of best_params, using h~'
  double err_final = 0.0;
  double total_final = 0.0;
  std::size_t best_iteration = 0;

  LambdaBreakdown initial_lambda;
  double initial_err = 0.0;
  double c_approx = 0.0;
  double err_budget = 0.0;

  std::vector<TracePoint> trace;
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  std::optional<std::size_t> non_finite_iteration;
};

inline double auto_c_approx(double lambda_init, double err_init) {
  return std::clamp(1e3 * lambda_init / std::max(err_init, 1e-12), 1e2, 1e9);
}

/// Lambda breakdown of a parameter point against H~(kappa, xi).
inline LambdaBreakdown shifted_lambda(const Hamiltonian& H, const ShiftedFactorization& p) {
  const Hamiltonian shifted = apply_symmetry_shift(H, p.shift(H.n_electrons));
  return lambda_df(p.factors, effective_one_body(shifted));
}

/// Minimizes Total = C * Err + lambda over (kappa, xi, A) with Adam, starting
/// from kappa = 0, xi = 0 and the standard double factorization of g.
///
/// The reported point is the lowest-Total iterate among those with
/// Err <= Err_init + err_budget and lambda <= lambda_init; the initial point
/// always qualifies. Factors that start exactly zero are seeded with small
/// noise from cfg.seed so they can leave the origin, where the gradient
/// vanishes.
inline OptimizationReport optimize(const Hamiltonian& H, std::size_t R, const OptimizationConfig& cfg,
                                   ParameterMask mask = {}) {
  cfg.validate();
  if (R < 1) throw std::invalid_argument("optimize: rank must be >= 1");
  const std::size_t n = H.n_orbitals();

  ShiftedFactorization init{0.0, OneBodyMatrix(n), initial_double_factorization(H.g, R)};
  R = init.factors.rank();
  const ShiftedCostModel model(H);

  OptimizationReport rep;
  rep.initial_lambda = shifted_lambda(H, init);
  rep.initial_err = model.evaluate(init, 0.0).err;
  rep.c_approx = cfg.c_approx.value_or(auto_c_approx(rep.initial_lambda.lambda_total, rep.initial_err));
  rep.err_budget = cfg.err_budget;
  const double c = rep.c_approx;

  const CostValue c0 = model.evaluate(init, c);
  rep.trace.push_back({0, c0.total, c0.err, c0.lambda});
  ShiftedFactorization best = init;
  CostValue best_cost = c0;
  std::size_t best_iter = 0;

  const double err_cap = rep.initial_err + cfg.err_budget;
  const double lambda_cap = c0.lambda;
  auto eligible = [&](const CostValue& v) { return v.err <= err_cap && v.lambda <= lambda_cap; };

  Eigen::VectorXd theta = packing::pack(init);
  {
    std::mt19937_64 rng(cfg.seed);
    double scale = 0.0;
    for (const auto& a : init.factors.factors()) scale = std::max(scale, a.matrix().cwiseAbs().maxCoeff());
    std::normal_distribution<double> noise(0.0, 1e-4 * (scale > 0.0 ? scale : 1.0));
    const std::size_t tri = packing::triangle_size(n);
    for (std::size_t r = 0; r < R && mask.factors; ++r) {
      if (!init.factors[r].matrix().isZero(0.0)) continue;
      const std::size_t off = 1 + (r + 1) * tri;
      for (std::size_t q = 0; q < tri; ++q) theta(static_cast<Eigen::Index>(off + q)) = noise(rng);
    }
  }

  Eigen::VectorXd grad_mask = Eigen::VectorXd::Ones(theta.size());
  {
    const std::size_t tri = packing::triangle_size(n);
    if (!mask.kappa) grad_mask(0) = 0.0;
    if (!mask.xi) grad_mask.segment(1, static_cast<Eigen::Index>(tri)).setZero();
    if (!mask.factors) grad_mask.tail(static_cast<Eigen::Index>(R * tri)).setZero();
  }

  Adam adam(theta.size(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  std::vector<double> running_min{c0.total};
  rep.stop_reason = StopReason::MaxIterations;

  std::size_t it = 1;
  for (; it <= cfg.max_iters; ++it) {
    const ShiftedFactorization p = packing::unpack(theta, n, R);
    const CostValue v = model.evaluate(p, c);
    rep.trace.push_back({it, v.total, v.err, v.lambda});
    if (!std::isfinite(v.total)) {
      rep.stop_reason = StopReason::NonFiniteCost;
      rep.non_finite_iteration = it;
      break;
    }
    if (eligible(v) && v.total < best_cost.total) {
      best = p;
      best_cost = v;
      best_iter = it;
    }
    running_min.push_back(std::min(running_min.back(), v.total));
    if (it >= cfg.patience) {
      const double before = running_min[it - cfg.patience];
      if (before - running_min.back() < cfg.rel_tol * std::abs(before)) {
        rep.stop_reason = StopReason::Converged;
        break;
      }
    }
    const Eigen::VectorXd g = packing::pack_gradient(model.gradient(p, c)).cwiseProduct(grad_mask);
    if (!g.allFinite()) {
      rep.stop_reason = StopReason::NonFiniteCost;
      rep.non_finite_iteration = it;
      break;
    }
    adam.step(theta, g);
  }
  rep.iterations_run = std::min(it, cfg.max_iters);

  rep.best_params = best;
  rep.best_iteration = best_iter;
  rep.err_final = best_cost.err;
  rep.total_final = best_cost.total;
  rep.lambda_breakdown = shifted_lambda(H, best);
  return rep;
}

}  // namespace dfshift
