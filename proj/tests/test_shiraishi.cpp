#include <gtest/gtest.h>

#include <cmath>

#include "cct/error.hpp"
#include "cct/shiraishi.hpp"
#include "cct/special.hpp"

using namespace cct;

TEST(ShiraishiTable, LehmannTwo) {
    ShiraishiTable t(GDescriptor::lehmann(2), 10, 4);
    for (int l = 1; l <= 4; ++l) {
        int N = 10 + l;
        for (int r = 1; r <= N; ++r) EXPECT_NEAR(t.a(l, r), 2.0 * r / (N + 1), 1e-13);
    }
}

TEST(ShiraishiTable, LehmannThree) {
    ShiraishiTable t(GDescriptor::lehmann(3), 7, 3);
    for (int l = 1; l <= 3; ++l) {
        int N = 7 + l;
        for (int r = 1; r <= N; ++r)
            EXPECT_NEAR(t.a(l, r), 3.0 * r * (r + 1) / ((N + 1.0) * (N + 2.0)), 1e-13);
    }
}

TEST(ShiraishiTable, UniformDensity) {
    ShiraishiTable t(GDescriptor::beta(1, 1), 5, 3);
    for (int r = 1; r <= 8; ++r) EXPECT_NEAR(t.a(3, r), 1.0, 1e-12);
    EXPECT_NEAR(t.sd(3), 0.0, 1e-12);
}

TEST(ShiraishiTable, MomentsSmallCase) {
    ShiraishiTable t(GDescriptor::lehmann(2), 1, 1);
    EXPECT_NEAR(t.a(1, 1), 2.0 / 3, 1e-15);
    EXPECT_NEAR(t.a(1, 2), 4.0 / 3, 1e-15);
    EXPECT_NEAR(t.mean(1), 1.0, 1e-15);
    EXPECT_NEAR(t.sd(1), 1.0 / 3, 1e-15);
}

TEST(ShiraishiTable, BetaClosedFormMatchesQuadrature) {
    const double a = 2.5, b = 0.8;
    ShiraishiTable t(GDescriptor::beta(a, b), 6, 2);
    int N = 8;
    for (int r = 1; r <= N; ++r) {
        // E[g(U)] for U ~ Beta(r, N-r+1) by midpoint quadrature
        const int K = 200000;
        double sum = 0;
        for (int i = 0; i < K; ++i) {
            double u = (i + 0.5) / K;
            sum += beta_pdf(u, a, b) * beta_pdf(u, r, N - r + 1);
        }
        EXPECT_NEAR(t.a(2, r), sum / K, 2e-3 * std::max(1.0, t.a(2, r)));
    }
}

TEST(ShiraishiTable, MonteCarloFallback) {
    auto mc = mc_score_row(GDescriptor::lehmann(3), 9, 200000, 4);
    for (int r = 1; r <= 9; ++r) EXPECT_NEAR(mc[r - 1], 3.0 * r * (r + 1) / (10.0 * 11.0), 0.02);
}

TEST(ShiraishiTable, PiecewiseMatchesStepFunction) {
    std::vector<double> v{0.2, 0.2, 1.0, 2.6};
    auto row = piecewise_score_row(v, 6);
    for (int r = 1; r <= 6; ++r) {
        double expect = 0;
        for (int c = 0; c < 4; ++c)
            expect += v[c] * (beta_cdf((c + 1) / 4.0, r, 7 - r) - beta_cdf(c / 4.0, r, 7 - r));
        EXPECT_NEAR(row[r - 1], expect, 1e-12);
    }
}

TEST(ShiraishiTable, Monotonicity) {
    ShiraishiTable inc(GDescriptor::beta(3, 1), 20, 5);
    for (int r = 1; r < 25; ++r) EXPECT_LE(inc.a(5, r), inc.a(5, r + 1));
    EXPECT_TRUE(inc.row_monotone(5));
    ShiraishiTable bumpy(GDescriptor::piecewise({0.5, 2.0, 0.5, 1.0}), 10, 2);
    EXPECT_FALSE(bumpy.row_monotone(2));
}

TEST(ShiraishiTable, ReflectionSwapsOrder) {
    ShiraishiTable t(GDescriptor::beta(2, 5), 6, 2, Direction::decreasing);
    auto r = t.reflected();
    EXPECT_EQ(r->direction(), Direction::increasing);
    for (int k = 1; k <= 8; ++k) EXPECT_NEAR(r->a(2, k), t.a(2, 9 - k), 1e-12);
}

TEST(ShiraishiTable, Errors) {
    EXPECT_THROW(GDescriptor::beta(0, 1), Error);
    EXPECT_THROW(GDescriptor::beta(1, -2), Error);
    EXPECT_THROW(ShiraishiTable(GDescriptor::lehmann(2), 5, 0), Error);
    ShiraishiTable t(GDescriptor::lehmann(2), 5, 2);
    EXPECT_THROW(t.row(3), Error);
}
