#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cct/permutation.hpp"
#include "cct/scores.hpp"
#include "cct/shiraishi.hpp"

namespace cct {

enum class TestKind { simes, simes_perm, storey_simes, fisher, wmw, shiraishi };
enum class CriticalMode { asymptotic, exact_perm };

struct LocalTestSpec {
    TestKind kind = TestKind::simes;
    CriticalMode mode = CriticalMode::asymptotic;
    PermOptions perm;
    double storey_lambda = 0.5;
    GDescriptor g;            // fixed score function for shiraishi
    bool estimate_g = false;  // shiraishi with g estimated from the data
    int mc_samples = 100000;

    static LocalTestSpec simes() { return {}; }
    static LocalTestSpec simes_perm();
    static LocalTestSpec storey(double lambda = 0.5);
    static LocalTestSpec fisher();
    static LocalTestSpec wmw(CriticalMode mode = CriticalMode::asymptotic);
    static LocalTestSpec shiraishi(GDescriptor g, CriticalMode mode = CriticalMode::asymptotic);
    static LocalTestSpec shiraishi_estimated();

    // simes | simes_perm | storey[:lambda] | fisher | wmw | shiraishi:lehmann:k |
    // shiraishi:beta:a:b | shiraishi:ghat
    static LocalTestSpec parse(const std::string& text);
    std::string id() const;
};

struct TestOutcome {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool reject = false;
    double pvalue = 1.0;
};

double simes_statistic(std::vector<double> p);
TestOutcome simes_test(const std::vector<double>& p, double alpha);

double storey_pi0(const std::vector<double>& p, double lambda);
int default_storey_h(int subset_size);
TestOutcome storey_simes_test(const std::vector<double>& p, double alpha, int h);
TestOutcome storey_simes_test_lambda(const std::vector<double>& p, double alpha, double lambda);

constexpr double infinite_m = std::numeric_limits<double>::infinity();
double fisher_threshold(int l, double m, double alpha);
TestOutcome fisher_test(const std::vector<double>& p, double m, double alpha);

struct WmwStatistics {
    double t_w = 0.0;
    double t_mw = 0.0;
};
WmwStatistics wmw_statistics(const ScoreSet& s, const std::vector<int>& subset);
double wmw_critical_value(int m, int l, double alpha);
TestOutcome wmw_test(const ScoreSet& s, const std::vector<int>& subset, double alpha,
                     CriticalMode mode = CriticalMode::asymptotic, const PermOptions& perm = {});

// Simes statistic as a function of the sorted pool ranks of the test points.
double simes_from_ranks(const std::vector<int>& ranks, int m);
TestOutcome simes_perm_test(const ScoreSet& s, const std::vector<int>& subset, double alpha,
                            const PermOptions& perm = {});

// rank_statistic is any statistic of the sorted pool ranks; direction per tail.
double perm_critical_value(const RankStatistic& stat, int m, int l, double alpha, Tail tail,
                           const PermOptions& perm = {});

TestOutcome shiraishi_test(const ScoreSet& s, const std::vector<int>& subset, const ShiraishiTable& table,
                           double alpha, CriticalMode mode = CriticalMode::asymptotic,
                           const PermOptions& perm = {});
double shiraishi_statistic(const ShiraishiTable& table, const std::vector<int>& sorted_ranks);

const char* to_string(TestKind k);

}  // namespace cct
