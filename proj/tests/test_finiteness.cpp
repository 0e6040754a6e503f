#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mapereg/finiteness.hpp"

using namespace mapereg;

TEST(Finiteness, LinearTailTerms) {
    const auto r = finiteness_diagnostic(linear_tail, empty_tail, 0.0, 1000);
    for (std::size_t k = 1; k <= 1000; ++k)
        EXPECT_NEAR(r.positive.terms[k - 1], 1.0 / static_cast<double>(k + 1), 1e-15) << k;
    EXPECT_EQ(r.verdict, FinitenessVerdict::LikelyDivergent);
}

TEST(Finiteness, QuadraticTailTerms) {
    const auto r = finiteness_diagnostic(quadratic_tail, empty_tail, 0.0, 1000);
    for (std::size_t k = 1; k <= 1000; ++k) {
        const double kk = static_cast<double>(k);
        EXPECT_NEAR(r.positive.terms[k - 1], (2 * kk + 1) / (kk * (kk + 1) * (kk + 1)), 1e-15) << k;
    }
    EXPECT_EQ(r.verdict, FinitenessVerdict::Finite);
}

TEST(Finiteness, HarmonicPartialSum) {
    // H(1001) - 1 summed in long double from the small end.
    long double h = 0.0L;
    for (int k = 1001; k >= 2; --k) h += 1.0L / k;
    const auto r = finiteness_diagnostic(linear_tail, empty_tail, 0.0, 1000);
    EXPECT_NEAR(r.positive.partial_sums.back(), static_cast<double>(h), 1e-12);
    EXPECT_NEAR(r.positive.partial_sums.back(), 6.4863, 1e-3);
}

TEST(Finiteness, NegativeSideCountsToo) {
    EXPECT_EQ(finiteness_diagnostic(quadratic_tail, linear_tail, 0.0, 500).verdict,
              FinitenessVerdict::LikelyDivergent);
    EXPECT_EQ(finiteness_diagnostic(empty_tail, quadratic_tail, 0.0, 500).verdict, FinitenessVerdict::Finite);
    EXPECT_EQ(finiteness_diagnostic(empty_tail, empty_tail, 0.0, 500).verdict, FinitenessVerdict::Finite);
}

TEST(Finiteness, MassAtZero) {
    const auto r = finiteness_diagnostic(quadratic_tail, empty_tail, 0.1, 100);
    EXPECT_EQ(r.verdict, FinitenessVerdict::ZeroMass);
    EXPECT_EQ(r.mass_at_zero, 0.1);
}

TEST(Finiteness, TailThatStopsEarlyIsFinite) {
    // No mass below 1/10: every term past k = 9 is zero.
    const TailCdf cdf = [](double e) { return e < 0.1 ? 0.0 : std::min(1.0, e); };
    const auto r = finiteness_diagnostic(cdf, empty_tail, 0.0, 1000);
    EXPECT_EQ(r.verdict, FinitenessVerdict::Finite);
    EXPECT_TRUE(std::isnan(r.positive.tail_slope));
}

TEST(Finiteness, RejectsBadInput) {
    EXPECT_THROW(finiteness_diagnostic(linear_tail, empty_tail, 0.0, 0), input_error);
    EXPECT_THROW(finiteness_diagnostic(linear_tail, empty_tail, 1.5, 10), input_error);
    const TailCdf wiggly = [](double e) { return e > 0.3 && e < 0.4 ? 0.05 : e; };
    EXPECT_THROW(finiteness_diagnostic(wiggly, empty_tail, 0.0, 20), input_error);
}

TEST(Finiteness, PartialSumsAreNondecreasing) {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> eps, cdf;
        double e = 1e-4, f = 0.0;
        while (e < 1.0) {
            eps.push_back(e);
            f = std::min(1.0, f + 0.05 * u(gen));
            cdf.push_back(f);
            e *= 1.0 + u(gen);
        }
        const auto r = finiteness_diagnostic(tabulated_tail(eps, cdf), tabulated_tail(eps, cdf), 0.0, 300);
        for (std::size_t k = 1; k < 300; ++k) {
            EXPECT_GE(r.positive.partial_sums[k], r.positive.partial_sums[k - 1]);
            EXPECT_GE(r.negative.partial_sums[k], r.negative.partial_sums[k - 1]);
        }
    }
}

TEST(TabulatedTail, InterpolatesThroughOrigin) {
    const TailCdf f = tabulated_tail({0.5, 1.0}, {0.25, 1.0});
    EXPECT_DOUBLE_EQ(f(0.25), 0.125);
    EXPECT_DOUBLE_EQ(f(0.75), 0.625);
    EXPECT_EQ(f(2.0), 1.0);
    EXPECT_EQ(f(0.0), 0.0);
    EXPECT_THROW(tabulated_tail({0.5, 0.4}, {0.1, 0.2}), input_error);
    EXPECT_THROW(tabulated_tail({0.5, 0.6}, {0.3, 0.2}), input_error);
    EXPECT_THROW(tabulated_tail({0.5}, {1.2}), input_error);
}
