#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mapereg/quantile.hpp"
#include "oracles.hpp"

using namespace mapereg;

namespace {

double wq(const std::vector<double>& v, const std::vector<double>& w, double tau) {
    return weighted_quantile(std::span<const double>(v), std::span<const double>(w), tau);
}

}  // namespace

TEST(WeightedQuantile, Examples) {
    EXPECT_EQ(wq({1, 2, 3}, {1, 1, 1}, 0.5), 2.0);
    EXPECT_EQ(wq({1, 3}, {1, 1}, 0.5), 2.0);
    EXPECT_EQ(wq({1, 2, 3}, {3, 1, 1}, 0.5), 1.0);
}

TEST(WeightedQuantile, ExampleMatchesBruteForce) {
    const auto iv = oracle::quantile_interval({1, 2, 3}, {3, 1, 1}, 0.5);
    EXPECT_EQ(iv.lower, 1.0);
    EXPECT_EQ(iv.upper, 1.0);
}

TEST(WeightedQuantile, RepeatedValuesPoolWeight) {
    EXPECT_EQ(wq({1, 1, 3, 3}, {1, 1, 1, 1}, 0.5), 2.0);
    EXPECT_EQ(wq({3, 1, 3, 1, 3}, {1, 1, 1, 1, 1}, 0.5), 3.0);
}

TEST(WeightedQuantile, ExtremeLevels) {
    EXPECT_EQ(wq({4, -1, 2}, {1, 1, 1}, 0.0), -1.0);
    EXPECT_EQ(wq({4, -1, 2}, {1, 1, 1}, 1.0), 4.0);
}

TEST(WeightedQuantile, DecimalTieIsExact) {
    // 0.3 + 0.2 misses 0.5 by an ulp in floating point; still an exact tie.
    EXPECT_DOUBLE_EQ(wq({1, 2, 3, 4}, {0.3, 0.2, 0.4, 0.1}, 0.5), 2.5);
}

TEST(WeightedQuantile, RejectsBadInput) {
    EXPECT_THROW(wq({}, {}, 0.5), input_error);
    EXPECT_THROW(wq({1, 2}, {1}, 0.5), input_error);
    EXPECT_THROW(wq({1, 2}, {1, 0}, 0.5), input_error);
    EXPECT_THROW(wq({1, 2}, {1, -1}, 0.5), input_error);
    EXPECT_THROW(wq({1, std::nan("")}, {1, 1}, 0.5), input_error);
    EXPECT_THROW(wq({1, 2}, {1, 1}, 1.5), input_error);
}

TEST(WeightedQuantile, Median) {
    const std::vector<double> v{5, 1, 4, 2};
    EXPECT_EQ(median(v), 3.0);
}

TEST(WeightedQuantile, MatchesBruteForceOnRandomSamples) {
    std::mt19937_64 gen(21);
    std::uniform_int_distribution<int> len(1, 12), small(-4, 4), wint(1, 5);
    std::uniform_real_distribution<double> u(-3.0, 3.0), wu(0.1, 2.0);
    for (int trial = 0; trial < 400; ++trial) {
        const int n = len(gen);
        const bool integral = trial % 2 == 0;  // integer data produces exact ties
        std::vector<double> v(n), w(n);
        for (int i = 0; i < n; ++i) {
            v[i] = integral ? small(gen) : u(gen);
            w[i] = integral ? wint(gen) : wu(gen);
        }
        for (double tau : {0.1, 0.25, 0.5, 0.7}) {
            const auto expected = oracle::quantile_interval(v, w, tau);
            const auto got = weighted_quantile_interval(v, w, tau);
            EXPECT_EQ(got.lower, expected.lower) << "trial " << trial << " tau " << tau;
            EXPECT_EQ(got.upper, expected.upper) << "trial " << trial << " tau " << tau;
            const double m = wq(v, w, tau);
            EXPECT_LE(oracle::check_loss(v, w, tau, m), oracle::check_loss(v, w, tau, expected.lower) + 1e-9);
        }
    }
}
