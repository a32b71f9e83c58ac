#include "cct/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cct/compare.hpp"
#include "cct/error.hpp"

namespace cct {

double combinations(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return std::round(c);
}

void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 1);
    while (true) {
        visit(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i + 1) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

PermNull permutation_null(const RankStatistic& stat, int m, int l, const PermOptions& opt) {
    if (l < 1 || m < 1) throw Error("permutation null needs m >= 1 and l >= 1");
    int N = m + l;
    double total = combinations(N, l);
    bool exhaustive = opt.mode == PermOptions::Mode::exhaustive ||
                      (opt.mode == PermOptions::Mode::automatic && total <= opt.exhaustive_cap);
    if (opt.mode == PermOptions::Mode::exhaustive && total > opt.exhaustive_cap)
        throw Error("C(" + std::to_string(N) + "," + std::to_string(l) +
                    ") exceeds the exhaustive enumeration cap; use random permutations");

    PermNull out;
    out.exhaustive = exhaustive;
    if (exhaustive) {
        out.values.reserve(static_cast<std::size_t>(total));
        for_each_combination(N, l, [&](const std::vector<int>& r) { out.values.push_back(stat(r)); });
    } else {
        if (opt.num_perms < 1) throw Error("num_perms must be >= 1");
        std::mt19937_64 rng(opt.seed);
        std::vector<int> pool(N);
        std::vector<int> r(l);
        out.values.reserve(opt.num_perms);
        for (int b = 0; b + 1 < opt.num_perms; ++b) {
            std::iota(pool.begin(), pool.end(), 1);
            for (int t = 0; t < l; ++t) {
                std::uniform_int_distribution<int> pick(t, N - 1);
                std::swap(pool[t], pool[pick(rng)]);
            }
            std::copy(pool.begin(), pool.begin() + l, r.begin());
            std::sort(r.begin(), r.end());
            out.values.push_back(stat(r));
        }
    }
    std::sort(out.values.begin(), out.values.end());
    return out;
}

namespace {

struct Group {
    double value;
    std::size_t count;
};

std::vector<Group> grouped(const PermNull& null, const double* observed) {
    std::vector<double> v = null.values;
    if (observed && !null.exhaustive) v.insert(std::upper_bound(v.begin(), v.end(), *observed), *observed);
    std::vector<Group> g;
    for (double x : v) {
        if (!g.empty() && approx_eq(g.back().value, x))
            ++g.back().count;
        else
            g.push_back({x, 1});
    }
    return g;
}

std::size_t total_count(const std::vector<Group>& g) {
    std::size_t t = 0;
    for (const auto& x : g) t += x.count;
    return t;
}

}  // namespace

double perm_critical_value(const PermNull& null, double alpha, Tail tail, const double* observed) {
    auto g = grouped(null, observed);
    double budget = alpha * static_cast<double>(total_count(g)) * (1.0 + 1e-12);
    if (tail == Tail::lower) {
        double best = 0.0;
        std::size_t cum = 0;
        for (const auto& x : g) {
            cum += x.count;
            if (static_cast<double>(cum) <= budget)
                best = std::max(best, x.value);
            else
                break;
        }
        return best;
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t cum = 0;
    for (auto it = g.rbegin(); it != g.rend(); ++it) {
        cum += it->count;
        if (static_cast<double>(cum) <= budget)
            best = it->value;
        else
            break;
    }
    return best;
}

double perm_strict_upper_value(const PermNull& null, double alpha, const double* observed) {
    auto g = grouped(null, observed);
    double c = perm_critical_value(null, alpha, Tail::upper, observed);
    if (std::isinf(c)) return g.back().value;
    double below = -std::numeric_limits<double>::infinity();
    for (const auto& x : g) {
        if (approx_eq(x.value, c)) break;
        below = x.value;
    }
    return below;
}

double perm_pvalue(const PermNull& null, double t, Tail tail, bool include_observed) {
    std::size_t hits = 0;
    for (double v : null.values)
        if (tail == Tail::lower ? approx_leq(v, t) : approx_leq(t, v)) ++hits;
    std::size_t total = null.values.size();
    if (include_observed && !null.exhaustive) {
        ++hits;
        ++total;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace cct
