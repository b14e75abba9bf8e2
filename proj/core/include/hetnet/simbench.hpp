#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"
#include "hetnet/optimizer.hpp"

namespace hetnet {

enum class Setting { linear, nonlinear };

const char* to_string(Setting s) noexcept;
Setting parse_setting(const std::string& s);

/// Known generating model for one simulated data set.
struct GroundTruth {
    Eigen::VectorXd alpha0;
    Eigen::VectorXd beta0;
    FeatureSet a_alpha;
    FeatureSet a_beta;
    double z_n{1.0};
    Setting setting{Setting::linear};
    std::uint64_t seed{0};

    /// exp((alpha0_i + beta0_j)/z_n) before any generator clamp.
    double rate(std::size_t i, std::size_t j) const {
        return std::exp((alpha0[Eigen::Index(i)] + beta0[Eigen::Index(j)]) / z_n);
    }
};

/// Columns of the nonlinear design that enter a logarithm; entries with
/// magnitude below kNearZero are redrawn.
inline constexpr std::size_t kDesignColumns = 10;
inline constexpr double kNearZero = 1e-6;

/// i.i.d. Uniform(-1, 1) attributes. With `redraw_near_zero`, entries of the
/// first ten columns with |x| < 1e-6 are redrawn (needed by the nonlinear
/// design).
AttributeMatrix gen_attributes(std::size_t n, std::size_t p, std::uint64_t seed, bool redraw_near_zero = false);

/// alpha0 = x_0 + ... + x_4, beta0 = x_5 + ... + x_9.
GroundTruth linear_truth(const AttributeMatrix& x, double z_n = 1.0);

/// alpha0 = 5(|x_0| + |x_1| + log|x_2| + log(|x_3| + |x_4|)) and the same form
/// on columns 5..9 for beta0.
GroundTruth nonlinear_truth(const AttributeMatrix& x, double z_n = 1.0);

/// Generator cap on (alpha0_i + beta0_j)/z_n.
inline constexpr double kMaxSimLogRate = 12.0;

struct SampleStats {
    std::size_t clamped_pairs{0};
};

/// Independent Poisson draws for every ordered pair i != j, in row-major pair
/// order from one counter-based stream.
CountNetwork sample_network(const GroundTruth& truth, std::uint64_t seed, SampleStats* stats = nullptr);

/// Mean squared error (1/n) sum (est - truth)^2 for one replication.
double mse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);

/// Single-replication RMSE, sqrt(mse).
double rmse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);

/// sqrt(mean_r MSE_r): the across-replication aggregate.
double aggregate_rmse(const std::vector<double>& per_replication_mse);

struct SelectionMetrics {
    double precision{0.0};
    double tpr{0.0};
    double f1{0.0};
};

/// precision = |hat & true| / |hat| (0 for an empty hat), tpr = |hat & true| /
/// |true|, f1 = 2 |hat & true| / (|hat| + |true|).
SelectionMetrics selection_metrics(const FeatureSet& s_hat, const FeatureSet& s_true);

/// What a method returns for one replication. Methods without selection leave
/// s_alpha / s_beta unset.
struct MethodOutput {
    Eigen::VectorXd alpha_hat;
    Eigen::VectorXd beta_hat;
    std::optional<FeatureSet> s_alpha;
    std::optional<FeatureSet> s_beta;
};

struct ReplicationData {
    std::size_t replication{0};  // 1-based
    std::uint64_t seed{0};
    AttributeMatrix x;
    GroundTruth truth;
    CountNetwork network;
};

using MethodFn = std::function<MethodOutput(const ReplicationData&)>;

struct EvaluationConfig {
    Setting setting{Setting::linear};
    std::size_t n{100};
    std::size_t p{1000};
    std::size_t replications{1};
    std::uint64_t base_seed{0};
    double sim_z_n{1.0};  // generator scaling
    unsigned jobs{1};
};

/// Per-replication, per-method, per-side row of replication_raw.csv.
struct RawRow {
    std::size_t replication{0};
    std::uint64_t seed{0};
    std::string method;
    std::string side;
    bool failed{false};
    double mse{0.0};
    double rmse{0.0};
    std::optional<SelectionMetrics> selection;
    std::string error;
};

struct MetricSummary {
    double mean{0.0};
    double sd{0.0};
};

/// Aggregates for one (method, side).
struct SideSummary {
    MetricSummary rmse;  // mean = sqrt(mean MSE), sd = sd of per-replication RMSE
    std::optional<MetricSummary> precision;
    std::optional<MetricSummary> tpr;
    std::optional<MetricSummary> f1;
    std::size_t successes{0};
};

struct MetricsReport {
    std::string setting;
    std::size_t replications{0};
    std::vector<std::string> methods;                       // evaluation order
    std::map<std::string, std::map<std::string, SideSummary>> summary;  // method -> side -> summary
    std::map<std::string, std::size_t> failures;            // method -> failed replications
    std::vector<std::uint64_t> seeds;                       // per replication
    std::vector<RawRow> raw;                                // replication-major
};

/// Deterministic data set for replication r (1-based) derived from the base seed.
ReplicationData make_replication(const EvaluationConfig& config, std::size_t r);

/// Generates R data sets and runs each method on each. Method failures are
/// recorded per replication and do not abort the run. Output is independent of
/// config.jobs.
MetricsReport run_replications(const EvaluationConfig& config,
                               const std::vector<std::pair<std::string, MethodFn>>& methods);

/// Built-in methods.
MethodFn oracle_method();
MethodFn mle_method(double z_n);
MethodFn mle_lasso_method(double z_n);

struct NetworkNetMethodConfig {
    FitConfig fit;
    std::size_t grid_size{5};        // grid_size x grid_size (lambda1, lambda2) values
    double grid_hi_fraction{1.0};    // of lambda_max
    double grid_lo_fraction{0.1};
    std::vector<GridPoint> fixed_grid;  // used instead when non-empty
    HbicScoring scoring{HbicScoring::refit};
};

/// HBIC-tuned fit over a lambda grid scaled to each data set's lambda_max.
MethodFn networknet_method(const NetworkNetMethodConfig& config);

/// metrics.csv: method,side,metric,mean,sd,R plus one `failures` row per method.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
/// replication_raw.csv
void write_replication_raw_csv(std::ostream& out, const MetricsReport& report);

}  // namespace hetnet
