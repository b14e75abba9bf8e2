#include "hetnet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hetnet/error.hpp"
#include "hetnet/parallel.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

void hierarchical_prox(Eigen::Ref<Eigen::MatrixXd> w1, Eigen::Ref<Eigen::VectorXd> theta, double tau, double m) {
    if (w1.cols() != theta.size()) {
        throw InvalidArgument("hierarchical_prox: first layer has " + std::to_string(w1.cols()) +
                              " feature columns, theta has " + std::to_string(theta.size()));
    }
    if (tau < 0.0) throw InvalidArgument("hierarchical_prox: tau must be non-negative");
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        theta[k] = soft_threshold(theta[k], tau);
        auto col = w1.col(k);
        const double bound = m * std::fabs(theta[k]);
        if (bound == 0.0) {
            col.setZero();
            continue;
        }
        const double norm = col.norm();
        if (norm == 0.0 || norm <= bound) continue;
        col *= bound / norm;
        // Rounding in the rescale can leave the norm an ulp above the bound.
        while (col.norm() > bound) col *= 1.0 - 0x1.0p-52;
    }
}

double hierarchy_violation(const Eigen::MatrixXd& w1, const Eigen::VectorXd& theta, double m) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        worst = std::max(worst, w1.col(k).norm() - m * std::fabs(theta[k]));
    }
    return worst;
}

void FitConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InvalidArgument(std::string("fit config: ") + what);
    };
    require(lambda1 >= 0.0, "lambda1 must be >= 0");
    require(lambda2 >= 0.0, "lambda2 must be >= 0");
    require(!gamma || *gamma >= 0.0, "gamma must be >= 0");
    require(m > 0.0, "M must be > 0");
    require(rho > 0.0, "rho must be > 0");
    require(!epsilon || *epsilon > 0.0, "epsilon must be > 0");
    require(t_max_outer > 0, "t_max_outer must be > 0");
    require(inner_epochs > 0, "inner_epochs must be > 0");
    require(z_n > 0.0, "z_n must be > 0");
    for (auto w : hidden_widths_alpha) require(w > 0, "hidden widths must be positive");
    for (auto w : hidden_widths_beta) require(w > 0, "hidden widths must be positive");
}

namespace {

constexpr int kMaxHalvings = 10;

struct SideLoss {
    Side side;
    const CountNetwork& a;
    const Eigen::VectorXd& fixed;
    double fixed_sum;
    double gamma;
    double z_n;

    double smooth(const Eigen::VectorXd& vals) const {
        const double nll = side == Side::alpha ? poisson_nll(vals, fixed, a, z_n) : poisson_nll(fixed, vals, a, z_n);
        const double gap = vals.sum() - fixed_sum;
        return nll + gamma * gap * gap;
    }

    Eigen::VectorXd node_gradient(const Eigen::VectorXd& vals) const {
        Eigen::VectorXd grad = side == Side::alpha ? nll_node_gradients(vals, fixed, a, z_n, Side::alpha)
                                                   : nll_node_gradients(fixed, vals, a, z_n, Side::beta);
        grad.array() += 2.0 * gamma * (vals.sum() - fixed_sum);
        return grad;
    }
};

void apply_step(SkipLayerNet& net, const NetGradients& grads, double rho) {
    net.theta() -= rho * grads.d_theta;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        net.layers()[l].weights -= rho * grads.d_layers[l].weights;
        net.layers()[l].biases -= rho * grads.d_layers[l].biases;
    }
}

void pin_outside_support(SkipLayerNet& net, std::span<const unsigned char> support) {
    auto& w1 = net.layers().front().weights;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k]) continue;
        net.theta()[Eigen::Index(k)] = 0.0;
        w1.col(Eigen::Index(k)).setZero();
    }
}

// <grad, candidate - current> and |candidate - current|^2 over all parameters.
std::pair<double, double> step_terms(const SkipLayerNet& current, const SkipLayerNet& candidate,
                                     const NetGradients& grads) {
    Eigen::VectorXd d = candidate.theta() - current.theta();
    double linear = grads.d_theta.dot(d);
    double squared = d.squaredNorm();
    for (std::size_t l = 0; l < current.layers().size(); ++l) {
        const Eigen::MatrixXd dw = candidate.layers()[l].weights - current.layers()[l].weights;
        const Eigen::VectorXd db = candidate.layers()[l].biases - current.layers()[l].biases;
        linear += grads.d_layers[l].weights.cwiseProduct(dw).sum() + grads.d_layers[l].biases.dot(db);
        squared += dw.squaredNorm() + db.squaredNorm();
    }
    return {linear, squared};
}

}  // namespace

UpdateResult update_side(Side side, const SkipLayerNet& net, const AttributeMatrix& x, const CountNetwork& a,
                         const Eigen::VectorXd& fixed_vals, const UpdateParams& params, const ProxObserver& observer) {
    if (x.n() != a.n()) throw InvalidArgument("update_side: attribute rows != network size");
    if (static_cast<std::size_t>(fixed_vals.size()) != a.n()) throw InvalidArgument("update_side: fixed values length");
    if (!params.support.empty() && params.support.size() != x.p()) throw InvalidArgument("update_side: support length");
    if (params.lambda < 0.0 || params.gamma < 0.0 || !(params.rho > 0.0) || !(params.m > 0.0)) {
        throw InvalidArgument("update_side: invalid hyper-parameters");
    }

    const SideLoss loss{side, a, fixed_vals, fixed_vals.sum(), params.gamma, params.z_n};
    UpdateResult result;
    result.net = net;
    ForwardTape tape;
    result.new_vals = forward_batch(result.net, x, &tape);
    result.final_rho = params.rho;
    if (params.inner_epochs <= 0) return result;

    double smooth = loss.smooth(result.new_vals);
    if (!std::isfinite(smooth)) {
        throw DivergenceError(std::string("update_side(") + to_string(side) + "): loss is not finite at start");
    }

    const std::size_t p = x.p();
    std::vector<unsigned char> mask(p);
    double rho = params.rho;
    const double rho_max = params.rho_max > 0.0 ? std::max(params.rho_max, params.rho) : params.rho;
    int accepted_run = 0;
    SkipLayerNet candidate;
    ForwardTape candidate_tape;
    for (int epoch = 0; epoch < params.inner_epochs; ++epoch) {
        const Eigen::VectorXd upstream = loss.node_gradient(result.new_vals);
        const Eigen::VectorXd d_theta = x.values().transpose() * upstream;
        // A first-layer column can be non-zero after the prox only if its
        // theta survives the threshold, which requires theta_k != 0 or
        // |d_theta_k| > lambda for every step size.
        for (std::size_t k = 0; k < p; ++k) {
            const auto kk = Eigen::Index(k);
            mask[k] = result.net.theta()[kk] != 0.0 || std::fabs(d_theta[kk]) > params.lambda;
            if (!params.support.empty() && !params.support[k]) mask[k] = 0;
        }
        const NetGradients grads = backward(result.net, x, upstream, &tape, mask);

        // Backtracking on the quadratic upper bound of the smooth part:
        // smooth(new) <= smooth(old) + <grad, step> + |step|^2 / (2 rho).
        bool accepted = false;
        bool any_finite = false;
        double cand_smooth = 0.0;
        Eigen::VectorXd cand_vals;
        SkipLayerNet fallback;
        Eigen::VectorXd fallback_vals;
        double fallback_smooth = 0.0;
        double fallback_rho = rho;
        ForwardTape fallback_tape;
        for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
            candidate = result.net;
            apply_step(candidate, grads, rho);
            hierarchical_prox(candidate.layers().front().weights, candidate.theta(), rho * params.lambda, params.m);
            if (!params.support.empty()) pin_outside_support(candidate, params.support);
#ifdef HETNET_CHECK_PROX
            if (hierarchy_violation(candidate.layers().front().weights, candidate.theta(), params.m) > 0.0) {
                throw Error("hierarchy constraint violated after prox");
            }
#endif
            if (observer) observer(candidate);
            cand_vals = forward_batch(candidate, x, &candidate_tape);
            cand_smooth = loss.smooth(cand_vals);
            if (std::isfinite(cand_smooth)) {
                const auto [linear, squared] = step_terms(result.net, candidate, grads);
                if (cand_smooth <= smooth + linear + squared / (2.0 * rho) + 1e-12 * (1.0 + std::fabs(smooth))) {
                    accepted = true;
                    break;
                }
                if (!any_finite || cand_smooth < fallback_smooth) {
                    fallback = candidate;
                    fallback_vals = cand_vals;
                    fallback_smooth = cand_smooth;
                    fallback_rho = rho;
                    fallback_tape = candidate_tape;
                }
                any_finite = true;
            }
            if (attempt < kMaxHalvings) rho *= 0.5;
        }
        if (!accepted) {
            if (!any_finite) {
                throw DivergenceError(std::string("update_side(") + to_string(side) + "): loss diverged at epoch " +
                                      std::to_string(epoch) + " after " + std::to_string(kMaxHalvings) +
                                      " step halvings (rho=" + std::to_string(rho) + ")");
            }
            // Take the finite trial step with the lowest smooth loss.
            candidate = std::move(fallback);
            cand_vals = std::move(fallback_vals);
            cand_smooth = fallback_smooth;
            candidate_tape = std::move(fallback_tape);
            rho = fallback_rho;
            result.stalled = true;
        }
        std::swap(result.net, candidate);
        std::swap(tape, candidate_tape);
        result.new_vals = std::move(cand_vals);
        smooth = cand_smooth;
        result.loss_trace.push_back(smooth);
        ++result.epochs_run;
        if (++accepted_run % 10 == 0) rho = std::min(rho_max, 2.0 * rho);
    }
    result.final_rho = rho;
    return result;
}

FeatureSet extract_selected(const Eigen::VectorXd& theta) {
    FeatureSet selected;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        if (std::fabs(theta[k]) > 1e-12) selected.insert(std::size_t(k));
    }
    return selected;
}

namespace {

LossBreakdown breakdown(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, const CountNetwork& a,
                        const SkipLayerNet& net_alpha, const SkipLayerNet& net_beta, const FitConfig& config,
                        double gamma) {
    LossBreakdown loss;
    loss.nll = poisson_nll(alpha, beta, a, config.z_n);
    loss.l1_alpha = l1_penalty(net_alpha.theta(), config.lambda1);
    loss.l1_beta = l1_penalty(net_beta.theta(), config.lambda2);
    const double gap = alpha.sum() - beta.sum();
    loss.ident_penalty = gamma * gap * gap;
    loss.total = loss.nll + loss.l1_alpha + loss.l1_beta + loss.ident_penalty;
    return loss;
}

}  // namespace

namespace {

void check_fit_inputs(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& config) {
    config.validate();
    if (a.n() != x.n()) {
        throw InvalidArgument("fit: network has " + std::to_string(a.n()) + " nodes, attributes have " +
                              std::to_string(x.n()) + " rows");
    }
    if (a.n() < 2) throw InvalidArgument("fit: need at least two nodes");
}

// Alternating loop of fit() starting from est.net_alpha / est.net_beta,
// followed by the exact centering and selection read-out.
void run_alternating(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& config,
                     HeterogeneityEstimate& est, std::span<const unsigned char> support_alpha,
                     std::span<const unsigned char> support_beta, const ProxObserver& observer) {
    const std::size_t n = a.n();
    const double gamma = config.gamma_for(n);
    const double eps = config.epsilon_for(n);
    Eigen::VectorXd alpha = forward_batch(est.net_alpha, x);
    Eigen::VectorXd beta = forward_batch(est.net_beta, x);

    UpdateParams beta_params{config.lambda2, gamma, config.rho, config.m, config.z_n, config.inner_epochs};
    UpdateParams alpha_params{config.lambda1, gamma, config.rho, config.m, config.z_n, config.inner_epochs};
    beta_params.support = support_beta;
    alpha_params.support = support_alpha;
    beta_params.rho_max = alpha_params.rho_max = config.rho;
    for (int t = 0; t < config.t_max_outer; ++t) {
        UpdateResult ub;
        UpdateResult ua;
        try {
            ub = update_side(Side::beta, est.net_beta, x, a, alpha, beta_params, observer);
            ua = update_side(Side::alpha, est.net_alpha, x, a, ub.new_vals, alpha_params, observer);
        } catch (const DivergenceError& e) {
            throw DivergenceError("fit: outer iteration " + std::to_string(t) + ": " + e.what());
        }
        // Each side resumes from the step size its last update settled on.
        beta_params.rho = ub.final_rho;
        alpha_params.rho = ua.final_rho;
        OuterRecord record;
        record.iteration = t + 1;
        record.delta_alpha = (ua.new_vals - alpha).norm();
        record.delta_beta = (ub.new_vals - beta).norm();
        est.net_alpha = std::move(ua.net);
        est.net_beta = std::move(ub.net);
        alpha = std::move(ua.new_vals);
        beta = std::move(ub.new_vals);
        record.loss = breakdown(alpha, beta, a, est.net_alpha, est.net_beta, config, gamma);
        est.history.push_back(record);
        est.outer_iterations = t + 1;
        if (record.delta_alpha < eps && record.delta_beta < eps) {
            est.converged = true;
            break;
        }
    }

    // Exact identifiability: shift alpha up and beta down by the same constant
    // (every alpha_i + beta_j is unchanged), folded into the output biases.
    const double shift = (beta.sum() - alpha.sum()) / (2.0 * double(n));
    est.centering_shift = shift;
    est.net_alpha.layers().back().biases[0] += shift;
    est.net_beta.layers().back().biases[0] -= shift;
    est.alpha_hat = forward_batch(est.net_alpha, x);
    est.beta_hat = forward_batch(est.net_beta, x);
    est.s_alpha = extract_selected(est.net_alpha.theta());
    est.s_beta = extract_selected(est.net_beta.theta());
    est.final_loss = breakdown(est.alpha_hat, est.beta_hat, a, est.net_alpha, est.net_beta, config, gamma);
}

std::vector<unsigned char> support_mask(const FeatureSet& s, std::size_t p) {
    std::vector<unsigned char> mask(p, 0);
    for (auto k : s) mask[k] = 1;
    return mask;
}

}  // namespace

HeterogeneityEstimate fit(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& config,
                          const ProxObserver& observer) {
    check_fit_inputs(a, x, config);
    HeterogeneityEstimate est;
    est.net_alpha = init_skipnet(x.p(), config.hidden_widths_alpha, config.m, derive_seed(config.seed, 1));
    est.net_beta = init_skipnet(x.p(), config.hidden_widths_beta, config.m, derive_seed(config.seed, 2));
    run_alternating(a, x, config, est, {}, {}, observer);
    return est;
}

HeterogeneityEstimate refit_support(const CountNetwork& a, const AttributeMatrix& x,
                                    const HeterogeneityEstimate& start, const FitConfig& config,
                                    const ProxObserver& observer) {
    FitConfig unpenalized = config;
    unpenalized.lambda1 = 0.0;
    unpenalized.lambda2 = 0.0;
    check_fit_inputs(a, x, unpenalized);
    if (start.net_alpha.p() != x.p() || start.net_beta.p() != x.p()) {
        throw InvalidArgument("refit_support: starting nets do not match the attributes");
    }
    const auto mask_alpha = support_mask(start.s_alpha, x.p());
    const auto mask_beta = support_mask(start.s_beta, x.p());
    HeterogeneityEstimate est;
    est.net_alpha = start.net_alpha;
    est.net_beta = start.net_beta;
    run_alternating(a, x, unpenalized, est, mask_alpha, mask_beta, observer);
    return est;
}

double hbic(double nll_at_fit, std::size_t s_total, std::size_t n, std::size_t p) {
    if (n < 2 || p < 1) throw InvalidArgument("hbic: need n >= 2 and p >= 1");
    const double m = double(n) * double(n - 1);
    return 2.0 * nll_at_fit + double(s_total) * std::log(std::log(m)) * std::log(double(p));
}

GridSearchResult grid_search(const CountNetwork& a, const AttributeMatrix& x, const FitConfig& base,
                             const std::vector<GridPoint>& grid, unsigned jobs, HbicScoring scoring) {
    if (grid.empty()) throw InvalidArgument("grid_search: empty grid");
    std::vector<GridRow> table(grid.size());
    std::vector<std::optional<HeterogeneityEstimate>> fits(grid.size());
    std::vector<std::optional<HeterogeneityEstimate>> refits(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        FitConfig config = base;
        config.lambda1 = grid[i].lambda1;
        config.lambda2 = grid[i].lambda2;
        config.m = grid[i].m;
        table[i].point = grid[i];
        try {
            auto est = fit(a, x, config);
            table[i].s_total = est.s_alpha.size() + est.s_beta.size();
            table[i].fit_nll = est.final_loss.nll;
            table[i].nll = est.final_loss.nll;
            if (scoring == HbicScoring::refit) {
                refits[i] = refit_support(a, x, est, config);
                table[i].nll = refits[i]->final_loss.nll;
            }
            table[i].hbic = hbic(table[i].nll, table[i].s_total, a.n(), x.p());
            table[i].failed = !std::isfinite(table[i].hbic);
            fits[i] = std::move(est);
        } catch (const DivergenceError&) {
            table[i].failed = true;
            table[i].nll = table[i].fit_nll = table[i].hbic = std::numeric_limits<double>::infinity();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (table[i].failed) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = table[*best];
        const auto& c = table[i];
        const double lam_b = b.point.lambda1 + b.point.lambda2;
        const double lam_c = c.point.lambda1 + c.point.lambda2;
        if (c.hbic < b.hbic || (c.hbic == b.hbic && (c.s_total < b.s_total ||
                                                     (c.s_total == b.s_total && lam_c < lam_b)))) {
            best = i;
        }
    }
    if (!best) throw DivergenceError("grid_search: every grid fit diverged");

    GridSearchResult result;
    result.best_index = *best;
    result.best_config = base;
    result.best_config.lambda1 = grid[*best].lambda1;
    result.best_config.lambda2 = grid[*best].lambda2;
    result.best_config.m = grid[*best].m;
    result.best_penalized = std::move(*fits[*best]);
    result.best_estimate = refits[*best] ? std::move(*refits[*best]) : result.best_penalized;
    result.table = std::move(table);
    return result;
}

LambdaMax null_lambda_max(const CountNetwork& a, const AttributeMatrix& x, double z_n) {
    if (!(z_n > 0.0)) throw InvalidArgument("z_n must be positive");
    if (a.n() != x.n() || a.n() < 2) throw InvalidArgument("null_lambda_max: size mismatch");
    const double n = double(a.n());
    const double mean_rate = a.total_count() / (n * (n - 1.0));
    const Eigen::VectorXd expected = Eigen::VectorXd::Constant(Eigen::Index(a.n()), mean_rate * (n - 1.0));
    const Eigen::VectorXd u_alpha = (expected - a.out_degree()) / z_n;
    const Eigen::VectorXd u_beta = (expected - a.in_degree()) / z_n;
    return {(x.values().transpose() * u_alpha).cwiseAbs().maxCoeff(),
            (x.values().transpose() * u_beta).cwiseAbs().maxCoeff()};
}

std::vector<GridPoint> default_lambda_grid(const LambdaMax& lmax, std::size_t size, double m, double hi_fraction,
                                           double lo_fraction) {
    if (size == 0) throw InvalidArgument("default_lambda_grid: size must be positive");
    auto ladder = [&](double top) {
        std::vector<double> values(size);
        for (std::size_t i = 0; i < size; ++i) {
            const double t = size == 1 ? 0.0 : double(i) / double(size - 1);
            values[i] = top * hi_fraction * std::pow(lo_fraction / hi_fraction, t);
        }
        return values;
    };
    const auto l1 = ladder(lmax.alpha);
    const auto l2 = ladder(lmax.beta);
    std::vector<GridPoint> grid;
    grid.reserve(size * size);
    for (double a : l1)
        for (double b : l2) grid.push_back({a, b, m});
    return grid;
}

}  // namespace hetnet
