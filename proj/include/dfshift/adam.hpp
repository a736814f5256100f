#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>

namespace dfshift {

/// Adam with bias-corrected first and second moments.
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
      : lr_(learning_rate),
        beta1_(beta1),
        beta2_(beta2),
        eps_(epsilon),
        m_(Eigen::VectorXd::Zero(size)),
        v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dfshift
