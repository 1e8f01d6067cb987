#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace zerolog::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one parameter group.
template <typename Scalar>
struct AdamState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v;
  std::uint64_t steps = 0;

  static AdamState zeros(Eigen::Index n) {
    return {Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n),
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n), 0};
  }

  /// Folds `grad` into the moments and returns the bias-corrected step
  /// direction m_hat / (sqrt(v_hat) + eps). The caller scales and signs it.
  template <typename Derived>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> direction(const Eigen::MatrixBase<Derived>& grad,
                                                     const AdamConfig& cfg = {}) {
    ++steps;
    const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(steps));
    const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(steps));
    return ((m.array() / c1) / ((v.array() / c2).sqrt() + Scalar(cfg.epsilon))).matrix();
  }

  friend bool operator==(const AdamState& a, const AdamState& b) {
    return a.steps == b.steps && a.m == b.m && a.v == b.v;
  }
};

}  // namespace zerolog::nn
