#include "hetnet/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "hetnet/error.hpp"
#include "hetnet/parallel.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

namespace {

// The net restricted to the inputs it can respond to. Every other coordinate
// contributes nothing to any coalition, so its Shapley value is exactly zero.
struct ReducedNet {
    SkipLayerNet net;
    std::vector<std::size_t> inputs;
};

ReducedNet reduce(const SkipLayerNet& net) {
    ReducedNet out;
    const auto& w1 = net.layers().front().weights;
    for (std::size_t k = 0; k < net.p(); ++k) {
        const auto col = Eigen::Index(k);
        if (net.theta()[col] != 0.0 || !w1.col(col).isZero(0.0)) out.inputs.push_back(k);
    }
    Eigen::VectorXd theta(Eigen::Index(out.inputs.size()));
    auto layers = net.layers();
    Eigen::MatrixXd first(w1.rows(), Eigen::Index(out.inputs.size()));
    for (std::size_t a = 0; a < out.inputs.size(); ++a) {
        theta[Eigen::Index(a)] = net.theta()[Eigen::Index(out.inputs[a])];
        first.col(Eigen::Index(a)) = w1.col(Eigen::Index(out.inputs[a]));
    }
    layers.front().weights = std::move(first);
    out.net = SkipLayerNet(std::move(theta), std::move(layers), net.hierarchy_m());
    return out;
}

std::vector<std::size_t> choose_nodes(std::size_t n, std::size_t max_nodes, std::uint64_t seed) {
    std::vector<std::size_t> nodes(n);
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    if (max_nodes == 0 || n <= max_nodes) return nodes;
    CounterRng rng(derive_seed(seed, std::numeric_limits<std::uint64_t>::max()));
    for (std::size_t i = 0; i < max_nodes; ++i) {
        const auto j = i + std::size_t(rng.below(n - i));
        std::swap(nodes[i], nodes[j]);
    }
    nodes.resize(max_nodes);
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

}  // namespace

FeatureSet selected_features(const SkipLayerNet& net) {
    FeatureSet out;
    for (std::size_t k = 0; k < net.p(); ++k)
        if (net.theta()[Eigen::Index(k)] != 0.0) out.insert(k);
    return out;
}

AttributionReport shapley_importance(const SkipLayerNet& net, const AttributeMatrix& x, const FeatureSet& features,
                                     std::uint64_t seed, const ShapleyOptions& options) {
    if (options.samples == 0) throw InvalidArgument("shapley_importance: samples must be >= 1");
    if (net.p() != x.p()) {
        throw InvalidArgument("shapley_importance: model has p = " + std::to_string(net.p()) +
                              " but attributes have " + std::to_string(x.p()) + " columns");
    }
    for (auto k : features)
        if (k >= x.p()) throw InvalidArgument("shapley_importance: feature index out of range");

    AttributionReport report;
    report.side = options.side;
    report.samples = options.samples;
    report.seed = seed;
    report.nodes = choose_nodes(x.n(), options.max_nodes, seed);

    const auto reduced = reduce(net);
    const std::size_t q = reduced.inputs.size();
    const Eigen::RowVectorXd means = x.column_means();
    Eigen::RowVectorXd baseline{Eigen::Index(q)};
    for (std::size_t a = 0; a < q; ++a) baseline[Eigen::Index(a)] = means[Eigen::Index(reduced.inputs[a])];

    // Position of each requested feature within the reduced input list, or -1.
    const std::vector<std::size_t> requested(features.begin(), features.end());
    std::vector<Eigen::Index> slot(requested.size(), -1);
    for (std::size_t f = 0; f < requested.size(); ++f) {
        auto it = std::find(reduced.inputs.begin(), reduced.inputs.end(), requested[f]);
        if (it != reduced.inputs.end()) slot[f] = Eigen::Index(it - reduced.inputs.begin());
    }

    const auto m = Eigen::Index(report.nodes.size());
    const auto nf = Eigen::Index(requested.size());
    report.values = Eigen::MatrixXd::Zero(m, nf);
    report.std_errors = Eigen::MatrixXd::Zero(m, nf);
    const double samples = double(options.samples);

    parallel_for(report.nodes.size(), options.jobs, [&](std::size_t idx) {
        const std::size_t node = report.nodes[idx];
        Eigen::RowVectorXd target{Eigen::Index(q)};
        for (std::size_t a = 0; a < q; ++a) target[Eigen::Index(a)] = x(node, reduced.inputs[a]);

        CounterRng rng(derive_seed(seed, node));
        Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(Eigen::Index(q));
        Eigen::ArrayXd sum_sq = Eigen::ArrayXd::Zero(Eigen::Index(q));
        std::vector<Eigen::Index> order(q);
        Eigen::RowVectorXd z{Eigen::Index(q)};
        const double start = forward(reduced.net, baseline);
        for (std::size_t s = 0; s < options.samples; ++s) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            for (std::size_t i = q; i > 1; --i) {
                std::swap(order[i - 1], order[std::size_t(rng.below(i))]);
            }
            z = baseline;
            double prev = start;
            for (auto a : order) {
                z[a] = target[a];
                const double cur = forward(reduced.net, z);
                const double delta = cur - prev;
                sum[a] += delta;
                sum_sq[a] += delta * delta;
                prev = cur;
            }
        }
        for (Eigen::Index f = 0; f < nf; ++f) {
            const auto a = slot[std::size_t(f)];
            if (a < 0) continue;
            const double mean = sum[a] / samples;
            report.values(Eigen::Index(idx), f) = mean;
            if (options.samples < 2) {
                report.std_errors(Eigen::Index(idx), f) = std::numeric_limits<double>::infinity();
            } else {
                const double var = std::max(0.0, (sum_sq[a] - samples * mean * mean) / (samples - 1.0));
                report.std_errors(Eigen::Index(idx), f) = std::sqrt(var / samples);
            }
        }
    });

    for (std::size_t f = 0; f < requested.size(); ++f) {
        FeatureAttribution attr;
        attr.feature = requested[f];
        attr.name = x.names()[requested[f]];
        if (m > 0) {
            attr.mean_abs = report.values.col(Eigen::Index(f)).cwiseAbs().mean();
            attr.std_error = std::sqrt(report.std_errors.col(Eigen::Index(f)).squaredNorm()) / double(m);
        }
        report.features.push_back(std::move(attr));
    }
    const auto order = rank_features(report);
    for (std::size_t r = 0; r < order.size(); ++r) report.features[order[r]].rank = r + 1;
    return report;
}

std::vector<std::size_t> rank_features(const AttributionReport& report) {
    if (report.features.empty()) throw InvalidArgument("rank_features: empty report");
    std::vector<std::size_t> order(report.features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& fa = report.features[a];
        const auto& fb = report.features[b];
        if (fa.mean_abs != fb.mean_abs) return fa.mean_abs > fb.mean_abs;
        return fa.feature < fb.feature;
    });
    return order;
}

void write_importance_csv(std::ostream& out, const AttributionReport& report) {
    out << "side,feature_index,feature_name,mean_abs_shap,stderr,rank\n";
    char buf[64];
    for (auto idx : rank_features(report)) {
        const auto& f = report.features[idx];
        out << to_string(report.side) << ',' << f.feature << ',' << f.name << ',';
        std::snprintf(buf, sizeof buf, "%.10g", f.mean_abs);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.10g", f.std_error);
        out << buf << ',' << f.rank << '\n';
    }
}

}  // namespace hetnet
