#include <cmath>

#include <gtest/gtest.h>

#include "hetnet/prox.hpp"
#include "hetnet/rng.hpp"

using namespace hetnet;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST(HierarchicalProx, ShrinksThetaAndRescalesColumn) {
    Eigen::MatrixXd w(2, 1);
    w << 0.6, 0.8;
    Eigen::VectorXd theta(1);
    theta << 0.5;
    hierarchical_prox(w, theta, 0.2, 1.0);
    EXPECT_NEAR(theta[0], 0.3, 1e-15);
    EXPECT_NEAR(w(0, 0), 0.18, 1e-15);
    EXPECT_NEAR(w(1, 0), 0.24, 1e-15);
}

TEST(HierarchicalProx, ThresholdedThetaKillsColumn) {
    Eigen::MatrixXd w(3, 1);
    w << 1.0, -2.0, 0.5;
    Eigen::VectorXd theta(1);
    theta << 0.1;
    hierarchical_prox(w, theta, 0.2, 10.0);
    EXPECT_EQ(theta[0], 0.0);
    EXPECT_TRUE(w.isZero(0.0));
}

TEST(HierarchicalProx, SatisfiedColumnUnchanged) {
    Eigen::MatrixXd w(2, 2);
    w << 0.1, 0.0, 0.2, 0.3;
    Eigen::VectorXd theta(2);
    theta << 1.0, -1.0;
    const Eigen::MatrixXd before = w;
    hierarchical_prox(w, theta, 0.0, 1.0);
    EXPECT_EQ(w, before);
    EXPECT_EQ(theta, Eigen::Vector2d(1.0, -1.0));
}

TEST(HierarchicalProx, ZeroColumnStaysZero) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 3);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 2.0);
    hierarchical_prox(w, theta, 0.5, 3.0);
    EXPECT_TRUE(w.isZero(0.0));
    EXPECT_TRUE(theta.isConstant(1.5));
}

TEST(HierarchicalProx, IdempotentAtZeroThreshold) {
    CounterRng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::MatrixXd w = random_matrix(5, 8, rng, 3.0);
        Eigen::VectorXd theta = random_matrix(8, 1, rng);
        hierarchical_prox(w, theta, 0.0, 2.0);
        const Eigen::MatrixXd w1 = w;
        const Eigen::VectorXd t1 = theta;
        hierarchical_prox(w, theta, 0.0, 2.0);
        EXPECT_EQ(theta, t1);
        EXPECT_TRUE(w.isApprox(w1, 1e-15)) << "trial " << trial;
    }
}

TEST(HierarchicalProx, ConstraintHoldsAfterEveryApplication) {
    CounterRng rng(22);
    for (int trial = 0; trial < 500; ++trial) {
        const double m = rng.uniform(0.1, 20.0);
        const double tau = rng.uniform(0.0, 0.5);
        Eigen::MatrixXd w = random_matrix(6, 10, rng, 5.0);
        Eigen::VectorXd theta = random_matrix(10, 1, rng);
        hierarchical_prox(w, theta, tau, m);
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            const double bound = m * std::fabs(theta[k]);
            EXPECT_LE(w.col(k).norm() - bound, 1e-12 * bound) << "trial " << trial << " column " << k;
        }
        EXPECT_LE(hierarchy_violation(w, theta, m), 1e-12 * m);
    }
}

TEST(HierarchicalProx, ZeroMultiplierReducesToSoftThreshold) {
    CounterRng rng(23);
    for (int trial = 0; trial < 10000; ++trial) {
        const double v = rng.uniform(-3.0, 3.0);
        const double tau = rng.uniform(0.0, 2.0);
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 1);
        Eigen::VectorXd theta(1);
        theta << v;
        hierarchical_prox(w, theta, tau, 0.0);
        const double expected = std::fabs(v) > tau ? std::copysign(std::fabs(v) - tau, v) : 0.0;
        ASSERT_EQ(theta[0], expected) << v << " " << tau;
        ASSERT_TRUE(w.isZero(0.0));
    }
}

TEST(SoftThreshold, ClosedForm) {
    EXPECT_EQ(soft_threshold(0.5, 0.2), 0.3);
    EXPECT_EQ(soft_threshold(-0.5, 0.25), -0.25);
    EXPECT_EQ(soft_threshold(0.2, 0.2), 0.0);
    EXPECT_EQ(soft_threshold(-0.1, 0.2), 0.0);
    EXPECT_EQ(soft_threshold(1.0, 0.0), 1.0);
}

TEST(HierarchyViolation, ReportsLargestExcess) {
    Eigen::MatrixXd w(1, 2);
    w << 3.0, 1.0;
    const Eigen::Vector2d theta(1.0, 1.0);
    EXPECT_DOUBLE_EQ(hierarchy_violation(w, theta, 2.0), 1.0);
    EXPECT_EQ(hierarchy_violation(w, theta, 5.0), 0.0);
}
