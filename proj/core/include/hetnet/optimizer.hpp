#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/netdata.hpp"
#include "hetnet/objective.hpp"
#include "hetnet/prox.hpp"
#include "hetnet/skipnet.hpp"

namespace hetnet {

struct FitConfig {
    double lambda1{0.0};  // L1 weight on theta_alpha
    double lambda2{0.0};  // L1 weight on theta_beta
    std::optional<double> gamma;    // identifiability penalty; defaults to 1/n
    double m{10.0};                 // hierarchy constant M
    double rho{1e-3};               // learning rate
    std::optional<double> epsilon;  // outer tolerance; defaults to 1e-4 * sqrt(n)
    int t_max_outer{50};
    int inner_epochs{1000};
    std::vector<std::size_t> hidden_widths_alpha{32, 16};
    std::vector<std::size_t> hidden_widths_beta{32, 16};
    double z_n{1.0};
    std::uint64_t seed{0};

    double gamma_for(std::size_t n) const { return gamma.value_or(1.0 / double(n)); }
    double epsilon_for(std::size_t n) const { return epsilon.value_or(1e-4 * std::sqrt(double(n))); }

    /// Throws InvalidArgument when a positivity/non-negativity condition fails.
    void validate() const;
};

using FeatureSet = std::set<std::size_t>;

/// Per-outer-iteration record (one row of fit_log.csv).
struct OuterRecord {
    int iteration{0};
    LossBreakdown loss;
    double delta_alpha{0.0};
    double delta_beta{0.0};
};

/// Result of fit(). Both nets are stored with the identifiability shift
/// folded into their output biases, so forward_batch(net_alpha, X) reproduces
/// alpha_hat exactly. `centering_shift` is the amount added to net_alpha's
/// output bias (and subtracted from net_beta's).
struct HeterogeneityEstimate {
    Eigen::VectorXd alpha_hat;
    Eigen::VectorXd beta_hat;
    FeatureSet s_alpha;
    FeatureSet s_beta;
    SkipLayerNet net_alpha;
    SkipLayerNet net_beta;
    int outer_iterations{0};
    LossBreakdown final_loss;
    bool converged{false};
    double centering_shift{0.0};
    std::vector<OuterRecord> history;
};

struct UpdateResult {
    Eigen::VectorXd new_vals;
    SkipLayerNet net;
    std::vector<double> loss_trace;  // smooth loss after each accepted epoch
    double final_rho{0.0};
    int epochs_run{0};
    bool stalled{false};  // some epoch took a step that failed the descent bound
};

struct UpdateParams {
    double lambda{0.0};
    double gamma{0.0};
    double rho{1e-3};
    double m{10.0};
    double z_n{1.0};
    int inner_epochs{1000};
    double rho_max{0.0};  // regrowth cap for the step size; 0 means rho
    // When non-empty (length p), features flagged 0 are held at exactly zero:
    // their theta and first-layer column never leave zero.
    std::span<const unsigned char> support{};
};

/// Optional observer invoked after every hierarchical prox application.
using ProxObserver = std::function<void(const SkipLayerNet&)>;

/// Proximal gradient updates of one side's net with the other side's fitted
/// values held fixed. Each epoch takes a full-batch gradient step on the
/// Poisson loss plus the identifiability penalty, then applies
/// hierarchical_prox with tau = rho * lambda.
///
/// The step size is backtracked: rho is halved (up to 10 times) while the
/// smooth loss is +inf or exceeds its quadratic upper bound around the current
/// point. When every retry gives +inf the update throws DivergenceError; when
/// the bound never holds the finite trial step with the lowest smooth loss is
/// taken and `stalled` set.
/// After every 10 accepted epochs rho doubles again, up to rho_max.
UpdateResult update_side(Side side, const SkipLayerNet& net, const AttributeMatrix& x, const CountNetwork& a,
                         const Eigen::VectorXd& fixed_vals, const UpdateParams& params,
                         const ProxObserver& observer = {});

/// Alternating fit: beta given alpha, then alpha given beta, until both
/// fitted vectors move less than epsilon (2-norm) or t_max_outer is reached.
HeterogeneityEstimate fit(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& config,
                          const ProxObserver& observer = {});

/// Unpenalized continuation of `start` with each side restricted to its
/// selected features (lambda1 = lambda2 = 0, other coordinates pinned at
/// zero). Runs the same alternating loop as fit() and centers the result.
HeterogeneityEstimate refit_support(const CountNetwork& a, const AttributeMatrix& x,
                                    const HeterogeneityEstimate& start, const FitConfig& config,
                                    const ProxObserver& observer = {});

/// Indices with |theta_k| > 1e-12.
FeatureSet extract_selected(const Eigen::VectorXd& theta);

/// 2 * nll + s_total * log(log(m)) * log(p), m = n(n-1).
double hbic(double nll_at_fit, std::size_t s_total, std::size_t n, std::size_t p);

struct GridPoint {
    double lambda1{0.0};
    double lambda2{0.0};
    double m{10.0};
};

struct GridRow {
    GridPoint point;
    bool failed{false};
    std::size_t s_total{0};
    double nll{0.0};      // the nll entering hbic
    double fit_nll{0.0};  // nll of the penalized fit itself
    double hbic{0.0};
};

/// Which negative log-likelihood scores a grid point.
enum class HbicScoring {
    refit,      // unpenalized refit on the selected support
    penalized,  // the penalized fit as is
};

struct GridSearchResult {
    FitConfig best_config;
    HeterogeneityEstimate best_estimate;  // the refit under HbicScoring::refit
    HeterogeneityEstimate best_penalized;  // penalized fit at the chosen point
    std::size_t best_index{0};
    std::vector<GridRow> table;  // grid order
};

/// Fits every grid point from the same seeded start and returns the HBIC
/// minimizer. With HbicScoring::refit each point is scored on the likelihood of
/// its support after an unpenalized refit, so L1 shrinkage of the true
/// coefficients does not pull the choice toward small lambda, and the refit
/// is returned as the estimate. Ties go to
/// smaller s_total, then smaller lambda1 + lambda2, then grid order. `jobs` > 1
/// fits grid points concurrently; results do not depend on it.
GridSearchResult grid_search(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& base,
                             const std::vector<GridPoint>& grid, unsigned jobs = 1,
                             HbicScoring scoring = HbicScoring::refit);

/// Smallest L1 weights that keep every theta at zero when the model is the
/// intercept-only fit (all rates equal to the mean count): max_k |X_k' u|
/// where u is the per-node loss gradient at that point.
struct LambdaMax {
    double alpha{0.0};
    double beta{0.0};
};
LambdaMax null_lambda_max(const CountNetwork& a, const AttributeMatrix& x, double z_n);

/// Cartesian (lambda1, lambda2) grid of `size` x `size` values, each
/// log-spaced between hi_fraction and lo_fraction of the side's lambda_max.
std::vector<GridPoint> default_lambda_grid(const LambdaMax& lmax, std::size_t size, double m,
                                           double hi_fraction = 1.0, double lo_fraction = 0.1);

}  // namespace hetnet
