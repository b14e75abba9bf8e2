#include "hetnet/skipnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetnet/error.hpp"
#include "hetnet/prox.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

SkipLayerNet::SkipLayerNet(std::size_t p, std::vector<std::size_t> hidden_widths, double hierarchy_m)
    : theta_(Eigen::VectorXd::Zero(Eigen::Index(p))), m_(hierarchy_m) {
    std::size_t d_in = p;
    hidden_widths.push_back(1);
    for (auto width : hidden_widths) {
        if (width == 0) throw InvalidArgument("hidden layer width must be positive");
        layers_.push_back({Eigen::MatrixXd::Zero(Eigen::Index(width), Eigen::Index(d_in)),
                           Eigen::VectorXd::Zero(Eigen::Index(width))});
        d_in = width;
    }
}

SkipLayerNet::SkipLayerNet(Eigen::VectorXd theta, std::vector<DenseLayer> layers, double hierarchy_m)
    : theta_(std::move(theta)), layers_(std::move(layers)), m_(hierarchy_m) {
    if (layers_.empty()) throw InvalidArgument("skip-layer net needs at least an output layer");
    std::size_t d_in = p();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.d_in() != d_in) {
            throw InvalidArgument("layer " + std::to_string(l) + " expects input width " + std::to_string(d_in) +
                                  ", has " + std::to_string(layer.d_in()));
        }
        if (static_cast<std::size_t>(layer.biases.size()) != layer.d_out()) {
            throw InvalidArgument("layer " + std::to_string(l) + " bias length mismatch");
        }
        d_in = layer.d_out();
    }
    if (d_in != 1) throw InvalidArgument("final layer must have a single output");
}

std::vector<std::size_t> SkipLayerNet::hidden_widths() const {
    std::vector<std::size_t> widths;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) widths.push_back(layers_[l].d_out());
    return widths;
}

std::size_t SkipLayerNet::parameter_count() const noexcept {
    std::size_t count = p();
    for (const auto& layer : layers_) count += std::size_t(layer.weights.size() + layer.biases.size());
    return count;
}

bool operator==(const SkipLayerNet& a, const SkipLayerNet& b) {
    if (a.m_ != b.m_ || a.theta_.size() != b.theta_.size() || a.theta_ != b.theta_) return false;
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
        const auto& la = a.layers_[l];
        const auto& lb = b.layers_[l];
        if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols()) return false;
        if (la.weights != lb.weights || la.biases != lb.biases) return false;
    }
    return true;
}

SkipLayerNet init_skipnet(std::size_t p, std::vector<std::size_t> hidden_widths, double hierarchy_m,
                          std::uint64_t seed) {
    SkipLayerNet net(p, std::move(hidden_widths), hierarchy_m);
    CounterRng rng(seed);
    for (auto& layer : net.layers()) {
        const double a = std::sqrt(6.0 / double(layer.d_in() + layer.d_out()));
        for (Eigen::Index j = 0; j < layer.weights.size(); ++j) layer.weights.data()[j] = rng.uniform(-a, a);
    }
    for (Eigen::Index k = 0; k < net.theta().size(); ++k) net.theta()[k] = rng.uniform(-0.1, 0.1);
    hierarchical_prox(net.layers().front().weights, net.theta(), 0.0, hierarchy_m);
    return net;
}

namespace {

// Features that can contribute to f: non-zero skip coefficient or non-zero
// first-layer column. Skipping the others only drops exact-zero terms.
std::vector<Eigen::Index> active_features(const SkipLayerNet& net) {
    std::vector<Eigen::Index> active;
    const auto& w1 = net.layers().front().weights;
    for (Eigen::Index k = 0; k < net.theta().size(); ++k) {
        if (net.theta()[k] != 0.0 || !w1.col(k).isZero(0.0)) active.push_back(k);
    }
    return active;
}

// Single-row evaluation shared by forward() and forward_batch() so both paths
// perform the same floating-point operations in the same order.
template <typename Row>
double eval_row(const SkipLayerNet& net, std::span<const Eigen::Index> active, const Row& x,
                std::vector<Eigen::VectorXd>& z) {
    const auto& layers = net.layers();
    double skip = 0.0;
    for (auto k : active) skip += net.theta()[k] * x(k);
    z[0] = layers[0].biases;
    for (auto k : active) {
        const double xk = x(k);
        if (xk != 0.0) z[0].noalias() += xk * layers[0].weights.col(k);
    }
    for (std::size_t l = 1; l < layers.size(); ++l) {
        z[l] = layers[l].biases;
        const auto& prev = z[l - 1];
        for (Eigen::Index j = 0; j < prev.size(); ++j) {
            if (prev[j] > 0.0) z[l].noalias() += prev[j] * layers[l].weights.col(j);
        }
    }
    return skip + z.back()[0];
}

void check_input(const SkipLayerNet& net, std::size_t width) {
    if (net.layers().empty()) throw InvalidArgument("uninitialized skip-layer net");
    if (width != net.p()) {
        throw InvalidArgument("input has " + std::to_string(width) + " features, net expects " +
                              std::to_string(net.p()));
    }
}

}  // namespace

double forward(const SkipLayerNet& net, std::span<const double> x) {
    check_input(net, x.size());
    const auto active = active_features(net);
    std::vector<Eigen::VectorXd> z(net.layers().size());
    return eval_row(net, active, [&](Eigen::Index k) { return x[std::size_t(k)]; }, z);
}

double forward(const SkipLayerNet& net, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    check_input(net, std::size_t(x.size()));
    const auto active = active_features(net);
    std::vector<Eigen::VectorXd> z(net.layers().size());
    return eval_row(net, active, [&](Eigen::Index k) { return x[k]; }, z);
}

Eigen::VectorXd forward_batch(const SkipLayerNet& net, const AttributeMatrix& x, ForwardTape* tape) {
    check_input(net, x.p());
    const auto& values = x.values();
    const Eigen::Index n = values.rows();
    auto active = active_features(net);
    std::vector<Eigen::VectorXd> z(net.layers().size());
    Eigen::VectorXd out(n);
    if (tape) {
        tape->pre.resize(net.layers().size());
        for (std::size_t l = 0; l < net.layers().size(); ++l) tape->pre[l].resize(Eigen::Index(net.layers()[l].d_out()), n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = eval_row(net, active, [&](Eigen::Index k) { return values(i, k); }, z);
        if (tape) {
            for (std::size_t l = 0; l < z.size(); ++l) tape->pre[l].col(i) = z[l];
        }
    }
    if (tape) tape->active = std::move(active);
    return out;
}

NetGradients backward(const SkipLayerNet& net, const AttributeMatrix& x, const Eigen::VectorXd& upstream,
                      const ForwardTape* tape, std::span<const unsigned char> first_layer_mask) {
    check_input(net, x.p());
    if (static_cast<std::size_t>(upstream.size()) != x.n()) {
        throw InvalidArgument("upstream length " + std::to_string(upstream.size()) + " != rows " +
                              std::to_string(x.n()));
    }
    if (!upstream.allFinite()) throw InvalidArgument("upstream gradient is not finite");
    if (!first_layer_mask.empty() && first_layer_mask.size() != net.p()) {
        throw InvalidArgument("first-layer mask length mismatch");
    }
    ForwardTape local;
    if (!tape) {
        forward_batch(net, x, &local);
        tape = &local;
    }
    const auto& layers = net.layers();
    const auto& values = x.values();
    const std::size_t depth = layers.size();

    NetGradients grads;
    grads.d_theta = values.transpose() * upstream;
    grads.d_layers.resize(depth);

    // delta holds dLoss/d(pre-activation) of layer l, one column per row of X.
    Eigen::MatrixXd delta = upstream.transpose();
    for (std::size_t l = depth; l-- > 0;) {
        auto& g = grads.d_layers[l];
        g.biases = delta.rowwise().sum();
        if (l > 0) {
            const Eigen::MatrixXd act = tape->pre[l - 1].cwiseMax(0.0);
            g.weights.noalias() = delta * act.transpose();
            Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
            delta = (tape->pre[l - 1].array() > 0.0).select(back, 0.0);
        } else if (first_layer_mask.empty()) {
            g.weights.noalias() = delta * values;
        } else {
            g.weights = Eigen::MatrixXd::Zero(delta.rows(), values.cols());
            for (std::size_t k = 0; k < first_layer_mask.size(); ++k) {
                if (first_layer_mask[k]) g.weights.col(Eigen::Index(k)).noalias() = delta * values.col(Eigen::Index(k));
            }
        }
    }
    return grads;
}

double gradient_check(const SkipLayerNet& net, const AttributeMatrix& x, const Eigen::VectorXd& upstream,
                      double step) {
    const auto grads = backward(net, x, upstream);
    std::vector<double> analytic;
    analytic.insert(analytic.end(), grads.d_theta.data(), grads.d_theta.data() + grads.d_theta.size());
    for (const auto& g : grads.d_layers) {
        analytic.insert(analytic.end(), g.weights.data(), g.weights.data() + g.weights.size());
        analytic.insert(analytic.end(), g.biases.data(), g.biases.data() + g.biases.size());
    }

    SkipLayerNet probe = net;
    std::vector<double*> params;
    for_each_parameter(probe, [&](double& v) { params.push_back(&v); });

    auto objective = [&] { return upstream.dot(forward_batch(probe, x)); };
    double worst = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double saved = *params[j];
        *params[j] = saved + step;
        const double up = objective();
        *params[j] = saved - step;
        const double down = objective();
        *params[j] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = std::fabs(analytic[j]);
        const double b = std::fabs(numeric);
        // Below the rounding noise of the central difference both estimates are zero.
        const double noise = std::max(1e-10, 16.0 * std::numeric_limits<double>::epsilon() *
                                                 (std::fabs(up) + std::fabs(down)) / step);
        if (a < noise && b < noise) continue;
        worst = std::max(worst, std::fabs(analytic[j] - numeric) / std::max(a, b));
    }
    return worst;
}

}  // namespace hetnet
