#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace cct {

enum class Tail { lower, upper };

struct PermOptions {
    enum class Mode { automatic, exhaustive, random };
    Mode mode = Mode::automatic;
    int num_perms = 10000;
    std::uint64_t seed = 0;
    double exhaustive_cap = 1e6;
};

// Statistic of the l test positions inside a pool of size N = m + l; ranks are 1-based and ascending.
using RankStatistic = std::function<double(const std::vector<int>& ranks)>;

struct PermNull {
    std::vector<double> values;  // sorted ascending
    bool exhaustive = true;
};

double combinations(int n, int k);

// Exhaustive when C(m+l, l) <= cap (or forced), otherwise num_perms - 1 random rank sets;
// the identity is added by the callers below through `observed`.
PermNull permutation_null(const RankStatistic& stat, int m, int l, const PermOptions& opt);

// Lower tail: largest a in {0} u {T_pi} with #{T_pi <= a} <= alpha |Pi|.
// Upper tail: smallest a in {T_pi} with #{T_pi >= a} <= alpha |Pi| (infinity if none).
double perm_critical_value(const PermNull& null, double alpha, Tail tail, const double* observed = nullptr);

// Largest distinct null value strictly below the upper-tail critical value, so that
// "T > value" rejects exactly when "T >= critical value" does.
double perm_strict_upper_value(const PermNull& null, double alpha, const double* observed = nullptr);

double perm_pvalue(const PermNull& null, double t, Tail tail, bool include_observed);

void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& visit);

}  // namespace cct
