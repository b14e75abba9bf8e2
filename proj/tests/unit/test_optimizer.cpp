#include <cmath>

#include <gtest/gtest.h>

#include "hetnet/error.hpp"
#include "hetnet/optimizer.hpp"
#include "hetnet/rng.hpp"
#include "hetnet/simbench.hpp"

using namespace hetnet;

namespace {

AttributeMatrix random_x(std::size_t n, std::size_t p, std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::MatrixXd v{Eigen::Index(n), Eigen::Index(p)};
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-1.0, 1.0);
    return AttributeMatrix(v);
}

CountNetwork random_network(std::size_t n, std::uint64_t seed, std::uint64_t max_count = 5) {
    CounterRng rng(seed);
    std::vector<Edge> edges;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t d = 0; d < n; ++d)
            if (s != d) edges.push_back({NodeIndex(s), NodeIndex(d), rng.below(max_count + 1)});
    return CountNetwork(n, edges);
}

CountNetwork uniform_network(std::size_t n, std::uint64_t c) {
    std::vector<Edge> edges;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t d = 0; d < n; ++d)
            if (s != d) edges.push_back({NodeIndex(s), NodeIndex(d), c});
    return CountNetwork(n, edges);
}

FitConfig small_config() {
    FitConfig config;
    config.hidden_widths_alpha = {4};
    config.hidden_widths_beta = {4};
    config.inner_epochs = 100;
    config.t_max_outer = 10;
    config.rho = 1e-2;
    config.seed = 3;
    return config;
}

// Linear-setting data small enough for unit tests.
ReplicationData linear_data(std::size_t n, std::size_t p, std::uint64_t seed, double z) {
    EvaluationConfig ec;
    ec.setting = Setting::linear;
    ec.n = n;
    ec.p = p;
    ec.base_seed = seed;
    ec.sim_z_n = z;
    return make_replication(ec, 1);
}

}  // namespace

TEST(UpdateSide, ZeroEpochsIsNoOp) {
    const auto x = random_x(6, 3, 1);
    const auto net = init_skipnet(3, {4}, 10.0, 2);
    UpdateParams params;
    params.inner_epochs = 0;
    const auto r = update_side(Side::alpha, net, x, random_network(6, 3), Eigen::VectorXd::Zero(6), params);
    EXPECT_EQ(r.net, net);
    EXPECT_EQ(r.new_vals, forward_batch(net, x));
    EXPECT_TRUE(r.loss_trace.empty());
}

TEST(UpdateSide, HugeLambdaZeroesSkipAndFirstLayer) {
    const auto x = random_x(8, 5, 4);
    const auto net = init_skipnet(5, {6, 3}, 10.0, 5);
    UpdateParams params;
    params.lambda = 1e6;
    params.inner_epochs = 5;
    params.rho = 1e-3;
    const auto r = update_side(Side::beta, net, x, random_network(8, 6), Eigen::VectorXd::Zero(8), params);
    EXPECT_TRUE(r.net.theta().isZero(0.0));
    EXPECT_TRUE(r.net.layers().front().weights.isZero(0.0));
    EXPECT_TRUE(r.new_vals.isConstant(r.new_vals[0], 0.0));
}

TEST(UpdateSide, SmoothLossDescendsAtSmallStep) {
    for (std::size_t n = 2; n <= 10; ++n) {
        const auto x = random_x(n, 3, 10 + n);
        const auto net = init_skipnet(3, {4, 2}, 10.0, 20 + n);
        UpdateParams params;
        params.gamma = 0.0;
        params.rho = 1e-4;
        params.inner_epochs = 200;
        const auto r = update_side(Side::alpha, net, x, random_network(n, 30 + n), Eigen::VectorXd::Zero(Eigen::Index(n)),
                                   params);
        ASSERT_EQ(r.loss_trace.size(), 200u);
        for (std::size_t e = 1; e < r.loss_trace.size(); ++e) {
            EXPECT_LE(r.loss_trace[e], r.loss_trace[e - 1] + 1e-9) << "n " << n << " epoch " << e;
        }
    }
}

TEST(UpdateSide, ObserverSeesConstraintAfterEveryProx) {
    const auto x = random_x(12, 6, 40);
    const auto net = init_skipnet(6, {5}, 2.0, 41);
    UpdateParams params;
    params.lambda = 2.0;
    params.m = 2.0;
    params.rho = 1e-2;
    params.inner_epochs = 50;
    int calls = 0;
    double worst = 0.0;
    update_side(Side::alpha, net, x, random_network(12, 42), Eigen::VectorXd::Zero(12), params,
                [&](const SkipLayerNet& s) {
                    ++calls;
                    worst = std::max(worst, hierarchy_violation(s.layers().front().weights, s.theta(), 2.0));
                });
    EXPECT_GE(calls, 50);
    EXPECT_EQ(worst, 0.0);
}

TEST(UpdateSide, SupportPinsOtherFeatures) {
    const auto x = random_x(10, 4, 50);
    const auto net = init_skipnet(4, {3}, 10.0, 51);
    const std::vector<unsigned char> support{1, 0, 1, 0};
    UpdateParams params;
    params.inner_epochs = 20;
    params.support = support;
    const auto r = update_side(Side::alpha, net, x, random_network(10, 52), Eigen::VectorXd::Zero(10), params);
    for (Eigen::Index k : {1, 3}) {
        EXPECT_EQ(r.net.theta()[k], 0.0);
        EXPECT_TRUE(r.net.layers().front().weights.col(k).isZero(0.0));
    }
}

TEST(UpdateSide, RejectsMismatchedInputs) {
    const auto x = random_x(5, 3, 60);
    const auto net = init_skipnet(3, {2}, 10.0, 61);
    UpdateParams params;
    EXPECT_THROW(update_side(Side::alpha, net, x, random_network(6, 62), Eigen::VectorXd::Zero(6), params),
                 InvalidArgument);
    params.rho = 0.0;
    EXPECT_THROW(update_side(Side::alpha, net, x, random_network(5, 62), Eigen::VectorXd::Zero(5), params),
                 InvalidArgument);
}

TEST(Fit, EmptyGraphDrivesRatesDown) {
    const std::size_t n = 8;
    const CountNetwork empty(n, {});
    const auto x = random_x(n, 3, 70);
    auto config = small_config();
    const double start = poisson_nll(forward_batch(init_skipnet(3, {4}, 10.0, derive_seed(config.seed, 1)), x),
                                     forward_batch(init_skipnet(3, {4}, 10.0, derive_seed(config.seed, 2)), x), empty,
                                     1.0);
    const auto est = fit(empty, x, config);
    EXPECT_GT(est.final_loss.nll, 0.0);
    EXPECT_LT(est.final_loss.total, start);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) EXPECT_LT(std::exp(est.alpha_hat[Eigen::Index(i)] + est.beta_hat[Eigen::Index(j)]), 1.0);
}

TEST(Fit, UniformNetworkRecoversCommonRate) {
    const std::size_t n = 6;
    const auto net = uniform_network(n, 4);
    auto config = small_config();
    config.t_max_outer = 30;
    const auto est = fit(net, random_x(n, 5, 80), config);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) {
                const double rate = std::exp(est.alpha_hat[Eigen::Index(i)] + est.beta_hat[Eigen::Index(j)]);
                EXPECT_NEAR(rate, 4.0, 0.6) << i << "," << j;
            }
}

TEST(Fit, CenteringIsExactAndFoldedIntoNets) {
    const auto data = linear_data(20, 12, 90, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    config.lambda1 = config.lambda2 = 1.0;
    const auto est = fit(data.network, data.x, config);
    EXPECT_NEAR(est.alpha_hat.sum(), est.beta_hat.sum(), 1e-9 * (1.0 + est.alpha_hat.cwiseAbs().sum()));
    EXPECT_EQ(forward_batch(est.net_alpha, data.x), est.alpha_hat);
    EXPECT_EQ(forward_batch(est.net_beta, data.x), est.beta_hat);
    EXPECT_EQ(est.s_alpha, extract_selected(est.net_alpha.theta()));
    EXPECT_EQ(est.history.size(), std::size_t(est.outer_iterations));
    EXPECT_LE(hierarchy_violation(est.net_alpha.layers().front().weights, est.net_alpha.theta(), config.m), 0.0);
    const auto& last = est.final_loss;
    EXPECT_DOUBLE_EQ(last.total, last.nll + last.l1_alpha + last.l1_beta + last.ident_penalty);
}

TEST(Fit, CenteringShiftLeavesRatesUnchanged) {
    CounterRng rng(91);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0), c = rng.uniform(-1.0, 1.0);
        // Shifting in the log domain keeps the sum, hence the rate, identical
        // whenever the shifted terms add back exactly.
        const double shifted = (a - c) + (b + c);
        EXPECT_NEAR(std::exp(shifted), std::exp(a + b), 1e-14 * std::exp(a + b));
    }
}

TEST(Fit, DeterministicForFixedSeed) {
    const auto data = linear_data(15, 10, 95, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    config.lambda1 = config.lambda2 = 0.5;
    const auto a = fit(data.network, data.x, config);
    const auto b = fit(data.network, data.x, config);
    EXPECT_EQ(a.alpha_hat, b.alpha_hat);
    EXPECT_EQ(a.beta_hat, b.beta_hat);
    EXPECT_EQ(a.net_alpha, b.net_alpha);
}

TEST(Fit, RejectsBadConfigAndShapes) {
    auto config = small_config();
    EXPECT_THROW(fit(random_network(5, 1), random_x(6, 3, 1), config), InvalidArgument);
    config.m = 0.0;
    EXPECT_THROW(fit(random_network(5, 1), random_x(5, 3, 1), config), InvalidArgument);
}

TEST(RefitSupport, StaysOnSelectedFeatures) {
    const auto data = linear_data(20, 12, 97, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    config.lambda1 = config.lambda2 = 3.0;
    const auto est = fit(data.network, data.x, config);
    const auto refit = refit_support(data.network, data.x, est, config);
    for (auto k : refit.s_alpha) EXPECT_TRUE(est.s_alpha.count(k));
    for (auto k : refit.s_beta) EXPECT_TRUE(est.s_beta.count(k));
    EXPECT_LE(refit.final_loss.nll, est.final_loss.nll + 1e-9);
}

TEST(ExtractSelected, Examples) {
    EXPECT_TRUE(extract_selected(Eigen::VectorXd::Zero(4)).empty());
    EXPECT_EQ(extract_selected(Eigen::Vector3d(0.0, 0.3, -0.2)), (FeatureSet{1, 2}));
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(2, 3);
    Eigen::VectorXd theta = Eigen::Vector3d(0.5, -0.7, 0.1);
    hierarchical_prox(w, theta, 1e9, 10.0);
    EXPECT_TRUE(extract_selected(theta).empty());
}

TEST(Hbic, Examples) {
    EXPECT_DOUBLE_EQ(hbic(42.0, 0, 50, 10), 84.0);
    EXPECT_NEAR(hbic(100.0, 10, 100, 1000), 200.0 + 10.0 * std::log(std::log(9900.0)) * std::log(1000.0), 1e-12);
    EXPECT_NEAR(hbic(100.0, 10, 100, 1000), 353.3, 0.05);
    for (std::size_t s = 0; s < 20; ++s) EXPECT_LT(hbic(7.0, s, 30, 40), hbic(7.0, s + 1, 30, 40));
    EXPECT_THROW(hbic(1.0, 0, 1, 5), InvalidArgument);
}

TEST(GridSearch, SingletonAndDuplicates) {
    const auto data = linear_data(15, 10, 100, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    const GridPoint pt{1.0, 1.0, 10.0};
    const auto single = grid_search(data.network, data.x, config, {pt}, 1, HbicScoring::penalized);
    EXPECT_EQ(single.best_index, 0u);
    config.lambda1 = config.lambda2 = 1.0;
    const auto direct = fit(data.network, data.x, config);
    EXPECT_EQ(single.best_estimate.alpha_hat, direct.alpha_hat);

    const auto dup = grid_search(data.network, data.x, config, {pt, pt, pt}, 2);
    EXPECT_EQ(dup.best_index, 0u);
    EXPECT_EQ(dup.table[0].hbic, dup.table[2].hbic);
    EXPECT_THROW(grid_search(data.network, data.x, config, {}), InvalidArgument);
}

TEST(GridSearch, ModerateLambdaBeatsFullShrinkage) {
    const auto data = linear_data(30, 15, 101, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    config.t_max_outer = 20;
    const auto lmax = null_lambda_max(data.network, data.x, 5.0);
    const std::vector<GridPoint> grid{{lmax.alpha * 10, lmax.beta * 10, 10.0}, {lmax.alpha * 0.3, lmax.beta * 0.3, 10.0}};
    for (auto scoring : {HbicScoring::refit, HbicScoring::penalized}) {
        const auto r = grid_search(data.network, data.x, config, grid, 1, scoring);
        EXPECT_EQ(r.table[0].s_total, 0u);
        EXPECT_GT(r.table[1].s_total, 0u);
        EXPECT_EQ(r.best_index, r.table[1].hbic < r.table[0].hbic ? 1u : 0u);
        EXPECT_EQ(r.best_index, 1u);
    }
}

TEST(GridSearch, JobsDoNotChangeResults) {
    const auto data = linear_data(15, 10, 102, 5.0);
    auto config = small_config();
    config.z_n = 5.0;
    const auto grid = default_lambda_grid(null_lambda_max(data.network, data.x, 5.0), 2, 10.0);
    const auto a = grid_search(data.network, data.x, config, grid, 1);
    const auto b = grid_search(data.network, data.x, config, grid, 3);
    ASSERT_EQ(a.table.size(), b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) EXPECT_EQ(a.table[i].hbic, b.table[i].hbic);
    EXPECT_EQ(a.best_estimate.alpha_hat, b.best_estimate.alpha_hat);
}

TEST(LambdaGrid, LogSpacedBetweenFractions) {
    const auto grid = default_lambda_grid({10.0, 4.0}, 3, 5.0, 1.0, 0.01);
    ASSERT_EQ(grid.size(), 9u);
    EXPECT_DOUBLE_EQ(grid[0].lambda1, 10.0);
    EXPECT_NEAR(grid[3].lambda1, 1.0, 1e-12);
    EXPECT_NEAR(grid[8].lambda2, 0.04, 1e-12);
    EXPECT_EQ(grid[4].m, 5.0);
}

TEST(LambdaGrid, NullThresholdMatchesGradientAtMeanRate) {
    const auto net = random_network(9, 110);
    const auto x = random_x(9, 4, 111);
    const auto lmax = null_lambda_max(net, x, 2.0);
    const double mean = net.total_count() / (9.0 * 8.0);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(9, std::log(mean) * 2.0 / 2.0);
    const Eigen::VectorXd u = nll_node_gradients(c, c, net, 2.0, Side::alpha);
    EXPECT_NEAR(lmax.alpha, (x.values().transpose() * u).cwiseAbs().maxCoeff(), 1e-9);
}
