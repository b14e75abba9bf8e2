#include "hetnet/objective.hpp"

#include <cmath>
#include <limits>

#include "hetnet/error.hpp"

namespace hetnet {

const char* to_string(Side side) noexcept { return side == Side::alpha ? "alpha" : "beta"; }

namespace {

void check_inputs(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net, double z_n) {
    if (!(z_n > 0.0)) throw InvalidArgument("z_n must be positive");
    const auto n = Eigen::Index(net.n());
    if (f.size() != n || g.size() != n) {
        throw InvalidArgument("node value vectors must have length n = " + std::to_string(net.n()));
    }
}

bool overflows(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double z_n) {
    if (f.size() == 0) return false;
    const double top = f.maxCoeff() / z_n + g.maxCoeff() / z_n;
    return !(top <= kMaxLogRate);
}

}  // namespace

double poisson_nll(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net, double z_n) {
    check_inputs(f, g, net, z_n);
    if (overflows(f, g, z_n)) return std::numeric_limits<double>::infinity();
    const Eigen::ArrayXd e = (f.array() / z_n).exp();
    const Eigen::ArrayXd h = (g.array() / z_n).exp();
    const double pairs = e.sum() * h.sum() - (e * h).sum();
    const double linear = (net.out_degree().dot(f) + net.in_degree().dot(g)) / z_n;
    return pairs - linear;
}

double poisson_nll_naive(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net, double z_n) {
    check_inputs(f, g, net, z_n);
    const auto n = Eigen::Index(net.n());
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net.edges()) counts(e.src, e.dst) = static_cast<double>(e.count);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double eta = (f[i] + g[j]) / z_n;
            total += std::exp(eta) - counts(i, j) * eta;
        }
    }
    return total;
}

Eigen::VectorXd nll_node_gradients(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const CountNetwork& net,
                                   double z_n, Side side) {
    check_inputs(f, g, net, z_n);
    const auto n = Eigen::Index(net.n());
    if (overflows(f, g, z_n)) return Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    const Eigen::ArrayXd e = (f.array() / z_n).exp();
    const Eigen::ArrayXd h = (g.array() / z_n).exp();
    if (side == Side::alpha) {
        const double s_g = h.sum();
        return ((e * (s_g - h)) - net.out_degree().array()).matrix() / z_n;
    }
    const double s_f = e.sum();
    return ((h * (s_f - e)) - net.in_degree().array()).matrix() / z_n;
}

PenaltyValue identifiability_penalty(const Eigen::VectorXd& f, double target_sum, double gamma) {
    if (gamma < 0.0) throw InvalidArgument("gamma must be non-negative");
    const double gap = f.sum() - target_sum;
    return {gamma * gap * gap, Eigen::VectorXd::Constant(f.size(), 2.0 * gamma * gap)};
}

double l1_penalty(const Eigen::VectorXd& theta, double lambda) {
    if (lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
    return lambda * theta.lpNorm<1>();
}

}  // namespace hetnet
