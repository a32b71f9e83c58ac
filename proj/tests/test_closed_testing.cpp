#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "cct/closed_testing.hpp"
#include "cct/error.hpp"

using namespace cct;

namespace {

ScoreSet make(std::vector<double> x, std::vector<double> y) {
    return make_score_set(Eigen::Map<Eigen::VectorXd>(x.data(), x.size()),
                          Eigen::Map<Eigen::VectorXd>(y.data(), y.size()), TiePolicy::strict_policy());
}

// calibration 1..29; test scores giving p = [1/30, 1/30, 20/30]
ScoreSet worked_example() {
    std::vector<double> x;
    for (int i = 1; i <= 29; ++i) x.push_back(i);
    return make(x, {100, 101, 10.5});
}

ScoreSet random_instance(std::mt19937_64& rng, int m, int n) {
    std::normal_distribution<double> z;
    std::bernoulli_distribution outlier(0.4);
    std::vector<double> x(m), y(n);
    for (auto& v : x) v = z(rng);
    for (auto& v : y) v = z(rng) + (outlier(rng) ? 2.5 : 0.0);
    return make(x, y);
}

std::vector<int> members(unsigned mask) {
    std::vector<int> v;
    for (int j = 0; mask >> j; ++j)
        if (mask >> j & 1u) v.push_back(j);
    return v;
}

// Direct evaluation of the closed-testing definition: H_K survives when some J containing K is not
// locally rejected; d(S) is the smallest |S \ K| over surviving K inside S (the empty K always survives).
template <class Phi>
std::vector<int> oracle_bounds(int n, Phi phi) {
    unsigned full = (1u << n) - 1;
    std::vector<char> local(full + 1, 0);
    for (unsigned j = 1; j <= full; ++j) local[j] = phi(members(j)) ? 1 : 0;
    std::vector<char> survives(full + 1, 0);
    for (unsigned k = 0; k <= full; ++k) {
        if (k == 0) {
            survives[k] = 1;
            continue;
        }
        for (unsigned j = k; j <= full; ++j)
            if ((j & k) == k && !local[j]) {
                survives[k] = 1;
                break;
            }
    }
    std::vector<int> d(full + 1, 0);
    for (unsigned s = 0; s <= full; ++s) {
        int best = std::popcount(s);
        for (unsigned k = s;; k = (k - 1) & s) {
            if (survives[k]) best = std::min(best, std::popcount(s) - std::popcount(k));
            if (k == 0) break;
        }
        d[s] = best;
    }
    return d;
}

std::vector<double> pick(const Eigen::VectorXd& p, const std::vector<int>& idx) {
    std::vector<double> v;
    for (int j : idx) v.push_back(p[j]);
    return v;
}

}  // namespace

TEST(WorkedExample, BruteForce) {
    auto s = worked_example();
    auto p = conformal_pvalues(s);
    EXPECT_NEAR(p[0], 1.0 / 30, 1e-15);
    EXPECT_NEAR(p[2], 20.0 / 30, 1e-15);
    EXPECT_EQ(closed_testing_bruteforce(s, LocalTestSpec::simes(), {0, 1, 2}, 0.1).d, 2);
    EXPECT_EQ(closed_testing_bruteforce(s, LocalTestSpec::simes(), {2}, 0.1).d, 0);
}

TEST(WorkedExample, SimesShortcut) {
    Eigen::VectorXd p(3);
    p << 1.0 / 30, 1.0 / 30, 20.0 / 30;
    EXPECT_EQ(simes_h(p, 0.1), 1);
    EXPECT_EQ(simes_shortcut(p, {0, 1, 2}, 0.1).d, 2);
    auto d = closed_testing_discoveries(worked_example(), LocalTestSpec::simes(), 0.1);
    EXPECT_EQ(d.indices, (std::vector<int>{0, 1}));
}

TEST(BruteForce, NothingRejected) {
    auto s = make({5, 6, 7, 8}, {1, 2, 3});
    for (unsigned mask = 1; mask < 8; ++mask)
        EXPECT_EQ(closed_testing_bruteforce(s, LocalTestSpec::simes(), members(mask), 0.1).d, 0);
}

TEST(BruteForce, CapEnforced) {
    std::mt19937_64 rng(1);
    auto s = random_instance(rng, 10, 21);
    EXPECT_THROW(closed_testing_bruteforce(s, LocalTestSpec::simes(), {0}, 0.1), Error);
}

TEST(Shortcuts, AllPValuesOne) {
    Eigen::VectorXd p = Eigen::VectorXd::Ones(5);
    EXPECT_EQ(simes_h(p, 0.1), 5);
    EXPECT_EQ(simes_shortcut(p, all_indices(5), 0.1).d, 0);
    EXPECT_EQ(storey_simes_shortcut(p, all_indices(5), 0.1, 0.5).d, 0);
    EXPECT_TRUE(closed_testing_discoveries(make({9, 9.5}, {1, 2, 3}), LocalTestSpec::simes(), 0.1).indices.empty());
    auto s = make({5, 6, 7, 8}, {1, 2, 3});
    EXPECT_EQ(separable_shortcut(s, LocalTestSpec::fisher(), all_indices(3), 0.1).d, 0);
    EXPECT_EQ(separable_shortcut(s, LocalTestSpec::wmw(), all_indices(3), 0.1).d, 0);
    ShiraishiTable t(GDescriptor::lehmann(2), 4, 3);
    EXPECT_EQ(shiraishi_shortcut(s, t, all_indices(3), 0.1).d, 0);
}

TEST(Shortcuts, SeparableRejectsOtherTests) {
    auto s = make({5, 6, 7, 8}, {1, 2, 3});
    EXPECT_THROW(separable_shortcut(s, LocalTestSpec::simes(), {0}, 0.1), Error);
}

TEST(Shortcuts, NonMonotoneTableRejected) {
    auto s = make({5, 6, 7, 8}, {1, 2, 3});
    ShiraishiTable t(GDescriptor::piecewise({0.5, 2.0, 0.5, 1.0}), 4, 3);
    try {
        shiraishi_shortcut(s, t, {0, 1}, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "monotonize g first");
    }
}

class OracleEquivalence : public ::testing::TestWithParam<int> {};

TEST_P(OracleEquivalence, ShortcutsMatchDefinition) {
    const int m = GetParam();
    const double alpha = 0.1;
    std::mt19937_64 rng(100 + m);
    ShiraishiTable lehmann2(GDescriptor::lehmann(2), m, 8);
    ShiraishiTable lehmann3(GDescriptor::lehmann(3), m, 8);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 7;
        auto s = random_instance(rng, m, n);
        auto p = conformal_pvalues(s);
        auto simes = oracle_bounds(n, [&](const std::vector<int>& k) { return simes_test(pick(p, k), alpha).reject; });
        auto storey = oracle_bounds(
            n, [&](const std::vector<int>& k) { return storey_simes_test_lambda(pick(p, k), alpha, 0.5).reject; });
        auto fisher =
            oracle_bounds(n, [&](const std::vector<int>& k) { return fisher_test(pick(p, k), m, alpha).reject; });
        auto wmw = oracle_bounds(n, [&](const std::vector<int>& k) { return wmw_test(s, k, alpha).reject; });
        auto sh2 = oracle_bounds(
            n, [&](const std::vector<int>& k) { return shiraishi_test(s, k, lehmann2, alpha).reject; });
        auto sh3 = oracle_bounds(
            n, [&](const std::vector<int>& k) { return shiraishi_test(s, k, lehmann3, alpha).reject; });
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            auto sub = members(mask);
            ASSERT_EQ(simes_shortcut(p, sub, alpha).d, simes[mask]);
            ASSERT_EQ(storey_simes_shortcut(p, sub, alpha, 0.5).d, storey[mask]);
            ASSERT_EQ(separable_shortcut(s, LocalTestSpec::fisher(), sub, alpha).d, fisher[mask]);
            ASSERT_EQ(separable_shortcut(s, LocalTestSpec::wmw(), sub, alpha).d, wmw[mask]);
            ASSERT_EQ(shiraishi_shortcut(s, lehmann2, sub, alpha).d, sh2[mask]);
            ASSERT_EQ(shiraishi_shortcut(s, lehmann3, sub, alpha).d, sh3[mask]);
            ASSERT_EQ(closed_testing_bruteforce(s, LocalTestSpec::simes(), sub, alpha).d, simes[mask]);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(CalibrationSizes, OracleEquivalence, ::testing::Values(10, 29));

TEST(OracleEquivalence, DecreasingShiraishiThroughReflection) {
    std::mt19937_64 rng(7);
    const double alpha = 0.1;
    const int m = 15, n = 6;
    ShiraishiTable t(GDescriptor::beta(1, 3), m, n, Direction::decreasing);
    for (int rep = 0; rep < 30; ++rep) {
        auto s = random_instance(rng, m, n);
        auto d = oracle_bounds(n, [&](const std::vector<int>& k) { return shiraishi_test(s, k, t, alpha).reject; });
        for (unsigned mask = 1; mask < (1u << n); ++mask) ASSERT_EQ(shiraishi_shortcut(s, t, members(mask), alpha).d, d[mask]);
    }
}

TEST(OracleEquivalence, LehmannTwoMatchesWmwShortcut) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        auto s = random_instance(rng, 20, 8);
        ShiraishiTable t(GDescriptor::lehmann(2), 20, 8);
        for (unsigned mask = 1; mask < 256; mask += 7) {
            auto sub = members(mask);
            EXPECT_EQ(shiraishi_shortcut(s, t, sub, 0.1).d, separable_shortcut(s, LocalTestSpec::wmw(), sub, 0.1).d);
        }
    }
}

TEST(BruteForce, ExactModeMatchesDefinition) {
    std::mt19937_64 rng(9);
    const double alpha = 0.2;
    for (int rep = 0; rep < 10; ++rep) {
        auto s = random_instance(rng, 6, 5);
        auto spec = LocalTestSpec::wmw(CriticalMode::exact_perm);
        auto d = oracle_bounds(
            5, [&](const std::vector<int>& k) { return wmw_test(s, k, alpha, CriticalMode::exact_perm).reject; });
        for (unsigned mask = 1; mask < 32; ++mask)
            ASSERT_EQ(closed_testing_bruteforce(s, spec, members(mask), alpha).d, d[mask]);
    }
}

TEST(Storey, SmallLambdaNeverBeatsSimes) {
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 100; ++rep) {
        auto s = random_instance(rng, 29, 7);
        auto p = conformal_pvalues(s);
        auto sub = all_indices(7);
        EXPECT_LE(storey_simes_shortcut(p, sub, 0.1, 1e-9).d, simes_shortcut(p, sub, 0.1).d);
    }
}

TEST(Bh, Examples) {
    Eigen::VectorXd a(3), b(3);
    a << 0.01, 0.02, 0.2;
    auto r = bh_procedure(a, 0.1);
    EXPECT_EQ(r.d_bh, 2);
    EXPECT_EQ(r.set.indices, (std::vector<int>{0, 1}));
    EXPECT_EQ(r.set.kind, DiscoverySet::Kind::bh_fdr);
    EXPECT_EQ(bh_procedure(Eigen::VectorXd::Ones(4), 0.1).d_bh, 0);
    b << 0.03, 0.04, 0.05;
    EXPECT_EQ(bh_procedure(b, 0.15).d_bh, 3);
}

TEST(Properties, MonotoneInSubset) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        auto s = random_instance(rng, 29, 6);
        auto p = conformal_pvalues(s);
        ShiraishiTable t(GDescriptor::lehmann(3), 29, 6);
        for (unsigned a = 1; a < 64; ++a)
            for (unsigned b = a; b < 64; ++b) {
                if ((a & b) != a) continue;
                EXPECT_LE(simes_shortcut(p, members(a), 0.1).d, simes_shortcut(p, members(b), 0.1).d);
                EXPECT_LE(shiraishi_shortcut(s, t, members(a), 0.1).d, shiraishi_shortcut(s, t, members(b), 0.1).d);
                EXPECT_LE(separable_shortcut(s, LocalTestSpec::fisher(), members(a), 0.1).d,
                          separable_shortcut(s, LocalTestSpec::fisher(), members(b), 0.1).d);
            }
    }
}

TEST(Properties, SimesBhSandwich) {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 500; ++rep) {
        auto s = random_instance(rng, 50, 30);
        auto p = conformal_pvalues(s);
        int d = simes_shortcut(p, all_indices(30), 0.1).d;
        auto disc = closed_testing_discoveries(s, LocalTestSpec::simes(), 0.1);
        auto bh = bh_procedure(p, 0.1);
        EXPECT_LE(static_cast<int>(disc.indices.size()), d);
        EXPECT_LE(d, bh.d_bh);
        EXPECT_EQ(d > 0, bh.d_bh > 0);
    }
}

TEST(Properties, DiscoveriesBoundedForOtherTests) {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        auto s = random_instance(rng, 29, 7);
        auto spec = LocalTestSpec::fisher();
        auto disc = closed_testing_discoveries(s, spec, 0.1);
        EXPECT_LE(static_cast<int>(disc.indices.size()), closed_testing_bound(s, spec, all_indices(7), 0.1).d);
    }
}

TEST(Dispatch, MethodsReported) {
    std::mt19937_64 rng(14);
    auto s = random_instance(rng, 29, 7);
    auto sub = all_indices(7);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::simes(), sub, 0.1).method, BoundMethod::simes_shortcut);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::storey(), sub, 0.1).method, BoundMethod::storey_simes_shortcut);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::fisher(), sub, 0.1).method, BoundMethod::separable_shortcut);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::wmw(), sub, 0.1).method, BoundMethod::separable_shortcut);
    auto t = std::make_shared<ShiraishiTable>(GDescriptor::lehmann(3), 29, 7);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::shiraishi(GDescriptor::lehmann(3)), sub, 0.1, t).method,
              BoundMethod::shiraishi_shortcut);
    EXPECT_EQ(closed_testing_bound(s, LocalTestSpec::simes_perm(), sub, 0.1).method, BoundMethod::brute_force);
}
