#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"

namespace hetnet {

struct DenseLayer {
    Eigen::MatrixXd weights;  // d_out x d_in
    Eigen::VectorXd biases;   // d_out

    std::size_t d_in() const noexcept { return static_cast<std::size_t>(weights.cols()); }
    std::size_t d_out() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

/// Scalar-output network f(x) = theta'x + h_W(x), where h_W is a ReLU MLP with
/// no activation after its final (width-1) layer.
///
/// The first layer is stored d_out x d_in like every other layer, so the
/// first-layer weights attached to input feature k are *column* k of
/// `layers()[0].weights`. The hierarchy constraint bounds that column's
/// 2-norm by hierarchy_m() * |theta_k|.
class SkipLayerNet {
public:
    SkipLayerNet() = default;

    /// All-zero parameters. `hidden_widths` may be empty (h_W is then affine).
    SkipLayerNet(std::size_t p, std::vector<std::size_t> hidden_widths, double hierarchy_m = 10.0);

    /// Assembles a net from explicit parameters, validating the shape chain.
    SkipLayerNet(Eigen::VectorXd theta, std::vector<DenseLayer> layers, double hierarchy_m = 10.0);

    std::size_t p() const noexcept { return static_cast<std::size_t>(theta_.size()); }
    std::vector<std::size_t> hidden_widths() const;
    double hierarchy_m() const noexcept { return m_; }
    void set_hierarchy_m(double m) noexcept { m_ = m; }

    const Eigen::VectorXd& theta() const noexcept { return theta_; }
    Eigen::VectorXd& theta() noexcept { return theta_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    /// Total number of scalar parameters (theta plus every weight and bias).
    std::size_t parameter_count() const noexcept;

    friend bool operator==(const SkipLayerNet& a, const SkipLayerNet& b);

private:
    Eigen::VectorXd theta_;
    std::vector<DenseLayer> layers_;
    double m_{10.0};
};

/// Gradients shaped like a SkipLayerNet.
struct NetGradients {
    Eigen::VectorXd d_theta;
    std::vector<DenseLayer> d_layers;
};

/// Glorot-uniform hidden weights, zero biases, theta ~ U(-0.1, 0.1), followed
/// by one hierarchical projection (tau = 0) so the constraint holds at start.
SkipLayerNet init_skipnet(std::size_t p, std::vector<std::size_t> hidden_widths, double hierarchy_m,
                          std::uint64_t seed);

double forward(const SkipLayerNet& net, std::span<const double> x);
double forward(const SkipLayerNet& net, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Per-layer pre-activations recorded by forward_batch for reuse in backward.
struct ForwardTape {
    std::vector<Eigen::MatrixXd> pre;  // pre[l] is d_out(l) x n
    std::vector<Eigen::Index> active;  // input features with a non-zero first-layer column
};

/// Row i of the result equals forward(net, X.row(i)) bit for bit.
Eigen::VectorXd forward_batch(const SkipLayerNet& net, const AttributeMatrix& x, ForwardTape* tape = nullptr);

/// Exact gradients of sum_i upstream[i] * f(x_i) with respect to every
/// parameter. ReLU'(0) is taken as 0.
///
/// `first_layer_mask`, when non-empty, restricts the first-layer weight
/// gradient to the flagged input features; other columns are left at zero.
/// `tape` may come from a forward_batch call on the same (net, X).
NetGradients backward(const SkipLayerNet& net, const AttributeMatrix& x, const Eigen::VectorXd& upstream,
                      const ForwardTape* tape = nullptr, std::span<const unsigned char> first_layer_mask = {});

/// Worst relative error between backward() and central differences of
/// sum_i upstream[i] * forward(net, x_i). Pairs where both estimates are below
/// the rounding noise of the central difference (at least 1e-10) are skipped.
double gradient_check(const SkipLayerNet& net, const AttributeMatrix& x, const Eigen::VectorXd& upstream,
                      double step);

/// Calls fn(double&) on every parameter in a fixed order: theta, then for each
/// layer its weights (column-major) and biases.
template <typename Net, typename Fn>
void for_each_parameter(Net& net, Fn&& fn) {
    for (Eigen::Index k = 0; k < net.theta().size(); ++k) fn(net.theta()[k]);
    for (auto& layer : net.layers()) {
        for (Eigen::Index j = 0; j < layer.weights.size(); ++j) fn(layer.weights.data()[j]);
        for (Eigen::Index j = 0; j < layer.biases.size(); ++j) fn(layer.biases[j]);
    }
}

}  // namespace hetnet
