#include <cmath>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include "hetnet/rng.hpp"

using namespace hetnet;

TEST(CounterRng, MatchesReferenceSplitMix64Stream) {
    // Published SplitMix64 outputs for seed 0.
    CounterRng rng(0);
    EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
    EXPECT_EQ(rng.next_u64(), 0x06C45D188009454FULL);
}

TEST(CounterRng, SeekReplaysStream) {
    CounterRng a(12345);
    for (int i = 0; i < 17; ++i) a.next_u64();
    const auto expected = a.next_u64();
    CounterRng b(12345);
    b.seek(17);
    EXPECT_EQ(b.next_u64(), expected);
}

TEST(CounterRng, UniformOpenStaysInside) {
    CounterRng rng(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform(-1.0, 1.0);
        ASSERT_GT(u, -1.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(CounterRng, BelowIsUniform) {
    CounterRng rng(3);
    std::vector<int> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) ++counts[rng.below(7)];
    double stat = 0.0;
    for (int c : counts) stat += (c - draws / 7.0) * (c - draws / 7.0) / (draws / 7.0);
    EXPECT_LT(stat, boost::math::quantile(boost::math::complement(boost::math::chi_squared(6), 1e-4)));
}

TEST(DeriveSeed, DistinctStreams) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

class PoissonSampler : public ::testing::TestWithParam<double> {};

// Chi-square goodness of fit against the exact pmf, bins merged until each
// expects at least 5 draws.
TEST_P(PoissonSampler, GoodnessOfFit) {
    const double rate = GetParam();
    const int draws = 20000;
    CounterRng rng(derive_seed(42, std::uint64_t(rate * 1000)));
    std::map<std::uint64_t, int> counts;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto k = sample_poisson(rng, rate);
        ++counts[k];
        sum += double(k);
    }
    EXPECT_NEAR(sum / draws, rate, 5.0 * std::sqrt(rate / draws));

    const boost::math::poisson_distribution<double> dist(rate);
    const auto hi = std::uint64_t(rate + 10.0 * std::sqrt(rate) + 10.0);
    double stat = 0.0;
    int bins = 0;
    double expected = 0.0;
    double observed = 0.0;
    for (std::uint64_t k = 0; k <= hi; ++k) {
        expected += draws * boost::math::pdf(dist, double(k));
        observed += counts.count(k) ? counts[k] : 0;
        if (expected >= 5.0) {
            stat += (observed - expected) * (observed - expected) / expected;
            ++bins;
            expected = observed = 0.0;
        }
    }
    // Upper tail beyond hi folds into the last bin.
    double tail_obs = 0.0;
    for (const auto& [k, c] : counts)
        if (k > hi) tail_obs += c;
    expected += draws * boost::math::cdf(boost::math::complement(dist, double(hi)));
    observed += tail_obs;
    if (expected > 0.0) {
        stat += (observed - expected) * (observed - expected) / expected;
        ++bins;
    }
    const boost::math::chi_squared chi(bins - 1);
    EXPECT_LT(stat, boost::math::quantile(boost::math::complement(chi, 1e-4))) << "rate " << rate;
}

INSTANTIATE_TEST_SUITE_P(Rates, PoissonSampler, ::testing::Values(0.05, 1.0, 4.0, 29.5, 30.0, 75.0, 1000.0));

TEST(PoissonSamplerEdges, ZeroRateGivesZero) {
    CounterRng rng(1);
    EXPECT_EQ(sample_poisson(rng, 0.0), 0u);
}
