#include "hetnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetnet/error.hpp"
#include "hetnet/prox.hpp"

namespace hetnet {

MleEstimate mle_fit(const CountNetwork& a, double z_n, int max_iter, double tol) {
    if (!(z_n > 0.0)) throw InvalidArgument("mle_fit: z_n must be positive");
    const std::size_t n = a.n();
    if (n < 2) throw InvalidArgument("mle_fit: need at least two nodes");
    const auto nn = Eigen::Index(n);
    const double floor_rate = 0.5 / double(n);
    const Eigen::VectorXd& out = a.out_degree();
    const Eigen::VectorXd& in = a.in_degree();

    MleEstimate est;
    for (std::size_t i = 0; i < n; ++i) {
        if (out[Eigen::Index(i)] == 0.0) est.clamped_alpha.push_back(i);
        if (in[Eigen::Index(i)] == 0.0) est.clamped_beta.push_back(i);
    }

    // Work with rate factors r_i = exp(alpha_i/z), c_j = exp(beta_j/z).
    const double mean_rate = std::max(a.total_count() / (double(n) * double(n - 1)), floor_rate * floor_rate);
    Eigen::ArrayXd r = Eigen::ArrayXd::Constant(nn, std::sqrt(mean_rate));
    Eigen::ArrayXd c = r;
    for (auto i : est.clamped_alpha) r[Eigen::Index(i)] = floor_rate;
    for (auto j : est.clamped_beta) c[Eigen::Index(j)] = floor_rate;

    // A zero-degree node's exact MLE rate is 0, so it drops out of the other
    // side's sums; the floor is only what gets reported for it.
    auto active_sum = [](const Eigen::ArrayXd& v, const Eigen::VectorXd& degree) {
        double total = 0.0;
        for (Eigen::Index k = 0; k < v.size(); ++k)
            if (degree[k] > 0.0) total += v[k];
        return total;
    };
    Eigen::ArrayXd log_r = r.log();
    Eigen::ArrayXd log_c = c.log();
    for (int it = 1; it <= max_iter; ++it) {
        const double c_sum = active_sum(c, in);
        for (Eigen::Index i = 0; i < nn; ++i) {
            if (out[i] > 0.0) r[i] = out[i] / (c_sum - (in[i] > 0.0 ? c[i] : 0.0));
        }
        const double r_sum = active_sum(r, out);
        for (Eigen::Index j = 0; j < nn; ++j) {
            if (in[j] > 0.0) c[j] = in[j] / (r_sum - (out[j] > 0.0 ? r[j] : 0.0));
        }
        const Eigen::ArrayXd new_log_r = r.log();
        const Eigen::ArrayXd new_log_c = c.log();
        const double change = z_n * std::max((new_log_r - log_r).abs().maxCoeff(), (new_log_c - log_c).abs().maxCoeff());
        log_r = new_log_r;
        log_c = new_log_c;
        est.iterations = it;
        if (change < tol) {
            est.converged = true;
            break;
        }
    }

    Eigen::VectorXd alpha = (z_n * log_r).matrix();
    Eigen::VectorXd beta = (z_n * log_c).matrix();
    const double shift = (beta.sum() - alpha.sum()) / (2.0 * double(n));
    est.alpha_hat = alpha.array() + shift;
    est.beta_hat = beta.array() - shift;
    return est;
}

namespace {

struct Standardized {
    Eigen::MatrixXd z;       // n x p standardized columns
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;  // population sd; 0 marks a constant column
    double y_mean{0.0};
    Eigen::VectorXd y_centered;
};

Standardized standardize(const AttributeMatrix& x, const Eigen::VectorXd& y) {
    if (static_cast<std::size_t>(y.size()) != x.n()) throw InvalidArgument("lasso: response length != rows");
    if (x.n() == 0) throw InvalidArgument("lasso: no rows");
    if (!y.allFinite()) throw InvalidArgument("lasso: response is not finite");
    Standardized s;
    const double n = double(x.n());
    s.mean = x.values().colwise().mean();
    s.z = x.values().rowwise() - s.mean;
    s.scale = (s.z.colwise().squaredNorm() / n).cwiseSqrt();
    for (Eigen::Index k = 0; k < s.z.cols(); ++k) {
        if (s.scale[k] > 1e-12 * (1.0 + std::fabs(s.mean[k]))) {
            s.z.col(k) /= s.scale[k];
        } else {
            s.scale[k] = 0.0;
            s.z.col(k).setZero();
        }
    }
    s.y_mean = y.mean();
    s.y_centered = y.array() - s.y_mean;
    return s;
}

// Coordinate descent on the standardized problem, starting from `b`.
int coordinate_descent(const Standardized& s, double lambda, Eigen::VectorXd& b, int max_iter, double tol) {
    const double n = double(s.z.rows());
    Eigen::VectorXd resid = s.y_centered - s.z * b;
    int sweeps = 0;
    for (; sweeps < max_iter;) {
        double biggest = 0.0;
        for (Eigen::Index k = 0; k < b.size(); ++k) {
            if (s.scale[k] == 0.0) continue;
            const double old = b[k];
            const double rho = s.z.col(k).dot(resid) / n + old;
            const double updated = soft_threshold(rho, lambda);
            if (updated != old) {
                resid.noalias() -= (updated - old) * s.z.col(k);
                b[k] = updated;
                biggest = std::max(biggest, std::fabs(updated - old));
            }
        }
        ++sweeps;
        if (biggest < tol) break;
    }
    return sweeps;
}

LassoResult to_original_scale(const Standardized& s, const Eigen::VectorXd& b, int sweeps) {
    LassoResult result;
    result.coefficients = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        if (s.scale[k] != 0.0) result.coefficients[k] = b[k] / s.scale[k];
    }
    result.intercept = s.y_mean - s.mean.dot(result.coefficients);
    result.sweeps = sweeps;
    return result;
}

double lambda_max_of(const Standardized& s) {
    if (s.z.cols() == 0) return 0.0;
    return (s.z.transpose() * s.y_centered).cwiseAbs().maxCoeff() / double(s.z.rows());
}

}  // namespace

LassoResult lasso_fit(const AttributeMatrix& x, const Eigen::VectorXd& y, double lambda, int max_iter, double tol) {
    if (lambda < 0.0) throw InvalidArgument("lasso: lambda must be non-negative");
    const auto s = standardize(x, y);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(x.p()));
    const int sweeps = coordinate_descent(s, lambda, b, max_iter, tol);
    return to_original_scale(s, b, sweeps);
}

double lasso_lambda_max(const AttributeMatrix& x, const Eigen::VectorXd& y) { return lambda_max_of(standardize(x, y)); }

std::vector<LassoPathPoint> lasso_path(const AttributeMatrix& x, const Eigen::VectorXd& y, std::size_t count,
                                       double min_ratio) {
    if (count == 0) throw InvalidArgument("lasso_path: count must be positive");
    const auto s = standardize(x, y);
    const double top = lambda_max_of(s);
    const double n = double(x.n());
    const double per_feature = std::log(std::log(std::max(n, 3.0))) * std::log(double(std::max<std::size_t>(x.p(), 2)));
    const double tss = s.y_centered.squaredNorm();
    // An exact fit would send log(RSS) to -inf; floor it relative to the total.
    const double rss_floor = std::max(tss * 1e-14, std::numeric_limits<double>::min());

    std::vector<LassoPathPoint> path;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Eigen::Index(x.p()));
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : double(i) / double(count - 1);
        const double lambda = top * std::pow(min_ratio, t);
        const int sweeps = coordinate_descent(s, lambda, b, 10000, 1e-10);
        LassoPathPoint point;
        point.lambda = lambda;
        point.fit = to_original_scale(s, b, sweeps);
        point.rss = (s.y_centered - s.z * b).squaredNorm();
        point.support = std::size_t((b.array() != 0.0).count());
        point.criterion = n * std::log(std::max(point.rss, rss_floor) / n) + double(point.support) * per_feature;
        path.push_back(std::move(point));
    }
    return path;
}

const LassoPathPoint& select_by_hbic(const std::vector<LassoPathPoint>& path) {
    if (path.empty()) throw InvalidArgument("select_by_hbic: empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i].criterion < path[best].criterion) best = i;
    }
    return path[best];
}

TwoStageResult two_stage_select(const CountNetwork& a, const AttributeMatrix& x, double z_n, std::size_t path_length,
                                double min_ratio) {
    if (a.n() != x.n()) throw InvalidArgument("two_stage_select: network and attributes differ in n");
    TwoStageResult result;
    result.mle = mle_fit(a, z_n);

    auto stage_two = [&](const Eigen::VectorXd& response, FeatureSet& selected, double& lambda) {
        const auto path = lasso_path(x, response, path_length, min_ratio);
        const auto& chosen = select_by_hbic(path);
        lambda = chosen.lambda;
        for (Eigen::Index k = 0; k < chosen.fit.coefficients.size(); ++k) {
            if (chosen.fit.coefficients[k] != 0.0) selected.insert(std::size_t(k));
        }
        return Eigen::VectorXd((x.values() * chosen.fit.coefficients).array() + chosen.fit.intercept);
    };
    Eigen::VectorXd alpha = stage_two(result.mle.alpha_hat, result.s_alpha, result.lambda_alpha);
    Eigen::VectorXd beta = stage_two(result.mle.beta_hat, result.s_beta, result.lambda_beta);
    const double shift = (beta.sum() - alpha.sum()) / (2.0 * double(a.n()));
    result.alpha_hat = alpha.array() + shift;
    result.beta_hat = beta.array() - shift;
    return result;
}

}  // namespace hetnet
