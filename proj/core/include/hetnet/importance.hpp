#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"
#include "hetnet/objective.hpp"
#include "hetnet/optimizer.hpp"
#include "hetnet/skipnet.hpp"

namespace hetnet {

struct FeatureAttribution {
    std::size_t feature{0};
    std::string name;
    double mean_abs{0.0};   // mean over nodes of |Shapley value|
    double std_error{0.0};  // Monte-Carlo standard error of mean_abs
    std::size_t rank{0};    // 1 = largest mean_abs
};

struct AttributionReport {
    Side side{Side::alpha};
    std::size_t samples{0};
    std::uint64_t seed{0};
    std::vector<std::size_t> nodes;           // attributed rows of X, ascending
    std::vector<FeatureAttribution> features;  // in requested-feature order
    Eigen::MatrixXd values;                    // nodes x features Shapley estimates
    Eigen::MatrixXd std_errors;                // per-entry Monte-Carlo standard errors
};

struct ShapleyOptions {
    std::size_t samples{1000};     // permutations per node
    std::size_t max_nodes{500};    // larger inputs are subsampled
    unsigned jobs{1};
    Side side{Side::alpha};
};

/// Permutation-sampling Shapley values of forward(net, x_i) against the
/// column-mean baseline, for every node (or a seeded subsample of max_nodes)
/// and every feature in `features`. Each node draws from its own derived
/// stream, so results do not depend on `jobs`. With a single sample the
/// standard errors are infinite.
AttributionReport shapley_importance(const SkipLayerNet& net, const AttributeMatrix& x, const FeatureSet& features,
                                     std::uint64_t seed, const ShapleyOptions& options = {});

/// Feature positions of the report, ordered by descending mean_abs with ties
/// broken by feature index.
std::vector<std::size_t> rank_features(const AttributionReport& report);

/// Features the net can respond to: non-zero skip coefficient.
FeatureSet selected_features(const SkipLayerNet& net);

/// importance.csv: side,feature_index,feature_name,mean_abs_shap,stderr,rank.
void write_importance_csv(std::ostream& out, const AttributionReport& report);

}  // namespace hetnet
