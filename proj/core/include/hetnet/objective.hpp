#pragma once

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"

namespace hetnet {

enum class Side { alpha, beta };

const char* to_string(Side side) noexcept;

struct LossBreakdown {
    double nll{0.0};
    double l1_alpha{0.0};
    double l1_beta{0.0};
    double ident_penalty{0.0};
    double total{0.0};
};

/// Log-rates beyond this bound are treated as overflow; the loss is then +inf.
inline constexpr double kMaxLogRate = 700.0;

/// Poisson negative log-likelihood (up to the log A_ij! constant):
///
///   sum_{i != j} exp((f_i + g_j)/z) - A_ij (f_i + g_j)/z
///
/// evaluated in O(n + |E|) as S_f S_g - sum_i e_i h_i - (out'f + in'g)/z with
/// e_i = exp(f_i/z), h_i = exp(g_i/z). Returns +inf when
/// max(f)/z + max(g)/z exceeds kMaxLogRate.
double poisson_nll(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net, double z_n);

/// Reference O(n^2) double sum of the same quantity.
double poisson_nll_naive(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net, double z_n);

/// d poisson_nll / d f_i (side alpha) or d / d g_j (side beta).
Eigen::VectorXd nll_node_gradients(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net,
                                   double z_n, Side side);

struct PenaltyValue {
    double value{0.0};
    Eigen::VectorXd d_per_node;
};

/// gamma * (sum(f) - target_sum)^2 and its per-node gradient.
PenaltyValue identifiability_penalty(const Eigen::VectorXd& f, double target_sum, double gamma);

/// lambda * ||theta||_1
double l1_penalty(const Eigen::VectorXd& theta, double lambda);

}  // namespace hetnet
