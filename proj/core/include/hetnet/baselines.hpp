#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"
#include "hetnet/optimizer.hpp"

namespace hetnet {

struct MleEstimate {
    Eigen::VectorXd alpha_hat;
    Eigen::VectorXd beta_hat;
    int iterations{0};
    bool converged{false};
    std::vector<std::size_t> clamped_alpha;  // nodes with zero out-degree
    std::vector<std::size_t> clamped_beta;   // nodes with zero in-degree
};

/// Structure-only Poisson MLE of per-node (alpha_i, beta_j) by alternating the
/// closed-form stationarity updates
///
///   exp(alpha_i/z) = out_i / sum_{j != i} exp(beta_j/z)
///   exp(beta_j/z)  = in_j  / sum_{i != j} exp(alpha_i/z)
///
/// Nodes with zero degree have no finite MLE (the rate factor tends to 0).
/// They are left out of the other side's sums, reported with the rate factor
/// 0.5/n, and listed in clamped_alpha / clamped_beta. The result is
/// centered so sum(alpha_hat) == sum(beta_hat).
MleEstimate mle_fit(const CountNetwork& a, double z_n, int max_iter = 10000, double tol = 1e-8);

struct LassoResult {
    Eigen::VectorXd coefficients;  // original attribute scale
    double intercept{0.0};
    int sweeps{0};
};

/// Minimizes (1/2n)||y - b0 - X b||^2 + lambda ||b||_1 by cyclic coordinate
/// descent on internally standardized columns (mean 0, unit population
/// variance). Constant columns get a zero coefficient. `max_iter` bounds the
/// number of full sweeps.
LassoResult lasso_fit(const AttributeMatrix& x, const Eigen::VectorXd& y, double lambda, int max_iter = 10000,
                      double tol = 1e-10);

/// Smallest lambda with an all-zero lasso solution: max_k |x_k' (y - ybar)| / n
/// on standardized columns.
double lasso_lambda_max(const AttributeMatrix& x, const Eigen::VectorXd& y);

struct LassoPathPoint {
    double lambda{0.0};
    LassoResult fit;
    double rss{0.0};
    std::size_t support{0};
    double criterion{0.0};
};

/// Warm-started path over `count` log-spaced lambdas from lambda_max down to
/// min_ratio * lambda_max, each scored by n log(RSS/n) + s log(log n) log p.
std::vector<LassoPathPoint> lasso_path(const AttributeMatrix& x, const Eigen::VectorXd& y, std::size_t count = 50,
                                       double min_ratio = 1e-3);

/// Path point minimizing the criterion (earliest on ties).
const LassoPathPoint& select_by_hbic(const std::vector<LassoPathPoint>& path);

struct TwoStageResult {
    FeatureSet s_alpha;
    FeatureSet s_beta;
    Eigen::VectorXd alpha_hat;  // lasso fitted values, centered
    Eigen::VectorXd beta_hat;
    MleEstimate mle;
    double lambda_alpha{0.0};
    double lambda_beta{0.0};
};

/// MLE of per-node parameters, then a lasso of each estimated vector on the
/// attributes with lambda picked along the path by the HBIC analogue.
TwoStageResult two_stage_select(const CountNetwork& a, const AttributeMatrix& x, double z_n,
                                std::size_t path_length = 50, double min_ratio = 1e-3);

}  // namespace hetnet
