#pragma once

#include <Eigen/Dense>

namespace hetnet {

/// sign(v) * max(|v| - tau, 0)
inline double soft_threshold(double v, double tau) noexcept {
    const double mag = (v < 0.0 ? -v : v) - tau;
    if (!(mag > 0.0)) return 0.0;
    return v < 0.0 ? -mag : mag;
}

/// Hierarchical proximal step on one net's first layer and skip coefficients.
///
/// For every input feature k: theta_k is soft-thresholded by tau, then the
/// first-layer weights attached to feature k (column k of the d_out x p
/// matrix `w1`) are rescaled by min(1, M * |theta_k'| / ||w1.col(k)||_2).
/// A zero column stays zero. On return ||w1.col(k)||_2 <= M * |theta_k| for
/// every k, and theta_k == 0 forces the column to exact zeros.
void hierarchical_prox(Eigen::Ref<Eigen::MatrixXd> w1, Eigen::Ref<Eigen::VectorXd> theta, double tau, double m);

/// Largest violation max_k(||w1.col(k)||_2 - M|theta_k|), clipped below at 0.
double hierarchy_violation(const Eigen::MatrixXd& w1, const Eigen::VectorXd& theta, double m);

}  // namespace hetnet
