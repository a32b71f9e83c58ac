#include "cct/closed_testing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "cct/compare.hpp"
#include "cct/error.hpp"

namespace cct {

const char* to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::brute_force: return "brute_force";
        case BoundMethod::simes_shortcut: return "simes_shortcut";
        case BoundMethod::storey_simes_shortcut: return "storey_simes_shortcut";
        case BoundMethod::shiraishi_shortcut: return "shiraishi_shortcut";
        case BoundMethod::separable_shortcut: return "separable_shortcut";
    }
    return "?";
}

std::vector<int> all_indices(int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

namespace {

void check_subset(const std::vector<int>& subset, int n) {
    std::vector<char> seen(n, 0);
    for (int j : subset) {
        if (j < 0 || j >= n) throw Error("subset index " + std::to_string(j) + " out of range");
        if (seen[j]) throw Error("duplicate subset index " + std::to_string(j));
        seen[j] = 1;
    }
}

std::vector<double> gather(const Eigen::VectorXd& p, const std::vector<int>& idx) {
    std::vector<double> out(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) out[t] = p[idx[t]];
    return out;
}

DiscoveryBound make_bound(const std::vector<int>& subset, int d, double alpha, std::string test_id,
                          BoundMethod method) {
    DiscoveryBound b;
    b.subset = subset;
    b.d = d;
    b.alpha = alpha;
    b.test_id = std::move(test_id);
    b.method = method;
    return b;
}

// Indices sorted from least to most outlying: descending p-value, ties by index.
std::vector<int> order_by_pvalue(const Eigen::VectorXd& p) {
    std::vector<int> o = all_indices(static_cast<int>(p.size()));
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return p[a] > p[b]; });
    return o;
}

std::vector<int> order_by_score(const Eigen::VectorXd& y) {
    std::vector<int> o = all_indices(static_cast<int>(y.size()));
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return y[a] < y[b]; });
    return o;
}

// For i = 1..|S|, K is the |S|-i+1 least outlying points of S and the worst-case supersets add the
// j least outlying points of the complement of K, j = 0..n-|S|+i-1. The first superset the local test
// keeps stops the count.
template <class Eval>
int worst_case_bound(const std::vector<int>& order, const std::vector<int>& subset, Eval& eval) {
    int n = static_cast<int>(order.size());
    std::vector<char> in_s(n, 0);
    for (int j : subset) in_s[j] = 1;
    std::vector<int> s_sorted;
    for (int j : order)
        if (in_s[j]) s_sorted.push_back(j);
    int size = static_cast<int>(s_sorted.size());

    std::vector<char> in_k(n, 0);
    std::vector<int> k, kc;
    int d = 0;
    for (int i = 1; i <= size; ++i) {
        k.assign(s_sorted.begin(), s_sorted.begin() + (size - i + 1));
        std::fill(in_k.begin(), in_k.end(), 0);
        for (int j : k) in_k[j] = 1;
        kc.clear();
        for (int j : order)
            if (!in_k[j]) kc.push_back(j);
        eval.begin(k, kc);
        for (int j = 0; j <= static_cast<int>(kc.size()); ++j)
            if (!eval.rejects(j)) return d;
        ++d;
    }
    return d;
}

struct StoreyEval {
    const Eigen::VectorXd& p;
    double alpha, lambda;
    std::vector<double> base;
    const std::vector<int>* kc = nullptr;
    std::vector<double> q;

    void begin(const std::vector<int>& k, const std::vector<int>& c) {
        base = gather(p, k);
        kc = &c;
    }
    bool rejects(int j) {
        q = base;
        for (int t = 0; t < j; ++t) q.push_back(p[(*kc)[t]]);
        return storey_simes_test_lambda(q, alpha, lambda).reject;
    }
};

struct SeparableEval {
    std::vector<double> contribution;  // per test point
    std::function<bool(double, int)> rejects_sum;
    double base = 0.0;
    int base_size = 0;
    std::vector<double> prefix;

    void begin(const std::vector<int>& k, const std::vector<int>& kc) {
        base = 0.0;
        for (int j : k) base += contribution[j];
        base_size = static_cast<int>(k.size());
        prefix.assign(kc.size() + 1, 0.0);
        for (std::size_t t = 0; t < kc.size(); ++t) prefix[t + 1] = prefix[t] + contribution[kc[t]];
    }
    bool rejects(int j) { return rejects_sum(base + prefix[j], base_size + j); }
};

struct ShiraishiEval {
    const Eigen::VectorXd& y;
    const std::vector<int>& below;
    const ShiraishiTable& table;
    double alpha;
    const std::vector<int>* k = nullptr;
    const std::vector<int>* kc = nullptr;
    std::vector<int> ranks;

    void begin(const std::vector<int>& kk, const std::vector<int>& c) {
        k = &kk;
        kc = &c;
    }
    bool rejects(int j) {
        // both blocks are already in ascending score order; merge them
        int l = static_cast<int>(k->size()) + j;
        ranks.clear();
        std::size_t a = 0, b = 0;
        while (a < k->size() || b < static_cast<std::size_t>(j)) {
            int next;
            if (b == static_cast<std::size_t>(j) || (a < k->size() && y[(*k)[a]] < y[(*kc)[b]]))
                next = (*k)[a++];
            else
                next = (*kc)[b++];
            ranks.push_back(below[next] + static_cast<int>(ranks.size()) + 1);
        }
        double t = shiraishi_statistic(table, ranks);
        return definitely_greater(t, table.critical_value(l, alpha));
    }
};

}  // namespace

LocalTester::LocalTester(ScoreSet resolved, LocalTestSpec spec, std::shared_ptr<const ShiraishiTable> table)
    : scores_(std::move(resolved)), spec_(std::move(spec)), table_(std::move(table)) {
    p_ = conformal_pvalues(scores_);
    if (spec_.kind == TestKind::shiraishi && !table_) throw Error("shiraishi local test needs a score table");
}

const PermNull& LocalTester::null_for(int l) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = nulls_[l];
    if (!slot) {
        int m = scores_.m();
        PermOptions opt = spec_.perm;
        opt.seed += static_cast<std::uint64_t>(l);
        RankStatistic stat;
        switch (spec_.kind) {
            case TestKind::simes:
            case TestKind::simes_perm:
            case TestKind::storey_simes:
            case TestKind::fisher: stat = [m](const std::vector<int>& r) { return simes_from_ranks(r, m); }; break;
            case TestKind::wmw:
                stat = [](const std::vector<int>& r) {
                    double t = 0.0;
                    for (int x : r) t += x;
                    double ll = static_cast<double>(r.size());
                    return t - ll * (ll + 1.0) / 2.0;
                };
                break;
            case TestKind::shiraishi: {
                auto table = table_;
                stat = [table](const std::vector<int>& r) { return shiraishi_statistic(*table, r); };
                break;
            }
        }
        slot = std::make_unique<PermNull>(permutation_null(stat, m, l, opt));
    }
    return *slot;
}

TestOutcome LocalTester::operator()(const std::vector<int>& subset, double alpha) const {
    if (subset.empty()) return {0.0, 0.0, false, 1.0};
    int l = static_cast<int>(subset.size());
    auto pk = gather(p_, subset);
    switch (spec_.kind) {
        case TestKind::simes: return simes_test(pk, alpha);
        case TestKind::storey_simes: return storey_simes_test_lambda(pk, alpha, spec_.storey_lambda);
        case TestKind::fisher: return fisher_test(pk, scores_.m(), alpha);
        case TestKind::simes_perm: {
            TestOutcome o;
            o.statistic = simes_statistic(pk);
            const auto& null = null_for(l);
            o.critical_value = perm_critical_value(null, alpha, Tail::lower, &o.statistic);
            o.reject = approx_leq(o.statistic, o.critical_value);
            o.pvalue = perm_pvalue(null, o.statistic, Tail::lower, true);
            return o;
        }
        case TestKind::wmw:
            if (spec_.mode == CriticalMode::exact_perm) {
                auto w = wmw_statistics(scores_, subset);
                TestOutcome o;
                o.statistic = w.t_mw;
                const auto& null = null_for(l);
                o.critical_value = perm_critical_value(null, alpha, Tail::upper, &o.statistic);
                o.reject = approx_leq(o.critical_value, o.statistic);
                o.pvalue = perm_pvalue(null, o.statistic, Tail::upper, true);
                return o;
            }
            return wmw_test(scores_, subset, alpha, CriticalMode::asymptotic);
        case TestKind::shiraishi:
            if (spec_.mode == CriticalMode::exact_perm) {
                auto r = ranks_in_pool(scores_, subset).ranks;
                std::sort(r.begin(), r.end());
                TestOutcome o;
                o.statistic = shiraishi_statistic(*table_, r);
                const auto& null = null_for(l);
                o.critical_value = perm_strict_upper_value(null, alpha, &o.statistic);
                o.reject = definitely_greater(o.statistic, o.critical_value);
                o.pvalue = perm_pvalue(null, o.statistic, Tail::upper, true);
                return o;
            }
            return shiraishi_test(scores_, subset, *table_, alpha, CriticalMode::asymptotic);
    }
    return {};
}

BruteForceClosure::BruteForceClosure(const LocalTester& tester, double alpha, int cap) : n_(tester.scores().n()) {
    if (n_ > cap)
        throw Error("brute-force closed testing is capped at n = " + std::to_string(cap) +
                    "; use a shortcut-compatible test");
    unsigned full = 1u << n_;
    phibar_.assign(full, 0);
    std::vector<int> members;
    for (unsigned mask = 1; mask < full; ++mask) {
        members.clear();
        for (int j = 0; j < n_; ++j)
            if (mask & (1u << j)) members.push_back(j);
        phibar_[mask] = tester(members, alpha).reject ? 1 : 0;
    }
    // rejected by closed testing only when every superset is rejected locally
    for (int j = 0; j < n_; ++j)
        for (unsigned mask = 0; mask < full; ++mask)
            if (!(mask & (1u << j))) phibar_[mask] = std::min(phibar_[mask], phibar_[mask | (1u << j)]);
    phibar_[0] = 0;
}

int BruteForceClosure::d(const std::vector<int>& subset) const {
    unsigned s = 0;
    for (int j : subset) s |= 1u << j;
    int size = std::popcount(s);
    int best = size;
    for (unsigned k = s;; k = (k - 1) & s) {
        if (!phibar_[k]) best = std::min(best, size - std::popcount(k));
        if (k == 0) break;
    }
    return best;
}

DiscoveryBound closed_testing_bruteforce(const ScoreSet& s, const LocalTestSpec& test, const std::vector<int>& subset,
                                         double alpha, std::shared_ptr<const ShiraishiTable> table) {
    check_subset(subset, s.n());
    if (s.n() > brute_force_cap)
        throw Error("brute-force closed testing is capped at n = " + std::to_string(brute_force_cap) +
                    "; use a shortcut-compatible test");
    LocalTester tester(s, test, std::move(table));
    BruteForceClosure closure(tester, alpha);
    auto b = make_bound(subset, closure.d(subset), alpha, test.id(), BoundMethod::brute_force);
    if (!subset.empty()) b.pvalue = tester(subset, alpha).pvalue;
    return b;
}

int simes_h(const Eigen::VectorXd& p, double alpha) {
    int n = static_cast<int>(p.size());
    std::vector<double> sorted(p.data(), p.data() + n);
    std::sort(sorted.begin(), sorted.end());
    for (int k = n; k >= 1; --k) {
        bool keeps = true;
        for (int j = 1; j <= k && keeps; ++j)
            keeps = !approx_leq(static_cast<double>(k) * sorted[n - k + j - 1] / j, alpha);
        if (keeps) return k;
    }
    return 0;
}

DiscoveryBound simes_shortcut(const Eigen::VectorXd& p, const std::vector<int>& subset, double alpha) {
    check_subset(subset, static_cast<int>(p.size()));
    int h = simes_h(p, alpha);
    auto ps = gather(p, subset);
    std::sort(ps.begin(), ps.end());
    int size = static_cast<int>(ps.size());
    int d = size;
    if (h > 0) {
        for (int k = 0; k <= size; ++k) {
            bool keeps = true;
            for (int j = 1; j <= size - k && keeps; ++j)
                keeps = !approx_leq(static_cast<double>(h) * ps[k + j - 1] / j, alpha);
            if (keeps) {
                d = k;
                break;
            }
        }
    }
    auto b = make_bound(subset, d, alpha, "simes", BoundMethod::simes_shortcut);
    if (!subset.empty()) b.pvalue = simes_test(gather(p, subset), alpha).pvalue;
    return b;
}

DiscoveryBound storey_simes_shortcut(const Eigen::VectorXd& p, const std::vector<int>& subset, double alpha,
                                     double lambda) {
    check_subset(subset, static_cast<int>(p.size()));
    StoreyEval eval{p, alpha, lambda, {}, nullptr, {}};
    int d = worst_case_bound(order_by_pvalue(p), subset, eval);
    auto b = make_bound(subset, d, alpha, LocalTestSpec::storey(lambda).id(), BoundMethod::storey_simes_shortcut);
    if (!subset.empty()) b.pvalue = storey_simes_test_lambda(gather(p, subset), alpha, lambda).pvalue;
    return b;
}

DiscoveryBound shiraishi_shortcut(const ScoreSet& s, const ShiraishiTable& table, const std::vector<int>& subset,
                                  double alpha) {
    check_subset(subset, s.n());
    if (table.m() != s.m()) throw Error("score table built for a different calibration size");
    if (table.direction() == Direction::decreasing) {
        ScoreSet neg = s;
        neg.calibration = -s.calibration;
        neg.test = -s.test;
        auto b = shiraishi_shortcut(neg, *table.reflected(), subset, alpha);
        b.test_id = "shiraishi:" + table.g().id();
        return b;
    }
    auto below = count_below(s);
    ShiraishiEval eval{s.test, below, table, alpha, nullptr, nullptr, {}};
    // rows are checked lazily as they are first touched
    struct Checked {
        ShiraishiEval& e;
        void begin(const std::vector<int>& k, const std::vector<int>& kc) { e.begin(k, kc); }
        bool rejects(int j) {
            int l = static_cast<int>(e.k->size()) + j;
            if (!e.table.row_monotone(l)) throw Error("monotonize g first");
            return e.rejects(j);
        }
    } checked{eval};
    int d = worst_case_bound(order_by_score(s.test), subset, checked);
    auto b = make_bound(subset, d, alpha, "shiraishi:" + table.g().id(), BoundMethod::shiraishi_shortcut);
    if (!subset.empty()) b.pvalue = shiraishi_test(s, subset, table, alpha).pvalue;
    return b;
}

DiscoveryBound separable_shortcut(const ScoreSet& s, const LocalTestSpec& test, const std::vector<int>& subset,
                                  double alpha) {
    check_subset(subset, s.n());
    if (test.mode != CriticalMode::asymptotic) throw Error("separable shortcut needs asymptotic critical values");
    auto p = conformal_pvalues(s);
    SeparableEval eval;
    int m = s.m();
    if (test.kind == TestKind::fisher) {
        eval.contribution.resize(s.n());
        for (int j = 0; j < s.n(); ++j) eval.contribution[j] = -2.0 * std::log(p[j]);
        eval.rejects_sum = [m, alpha](double t, int l) { return t > fisher_threshold(l, m, alpha); };
    } else if (test.kind == TestKind::wmw) {
        auto below = count_below(s);
        eval.contribution.assign(below.begin(), below.end());
        eval.rejects_sum = [m, alpha](double t, int l) { return t >= wmw_critical_value(m, l, alpha); };
    } else {
        throw Error("separable shortcut supports fisher and wmw only");
    }
    int d = worst_case_bound(order_by_pvalue(p), subset, eval);
    auto b = make_bound(subset, d, alpha, test.id(), BoundMethod::separable_shortcut);
    if (!subset.empty()) {
        LocalTester tester(s, test);
        b.pvalue = tester(subset, alpha).pvalue;
    }
    return b;
}

DiscoveryBound closed_testing_bound(const ScoreSet& resolved, const LocalTestSpec& test,
                                    const std::vector<int>& subset, double alpha,
                                    std::shared_ptr<const ShiraishiTable> table) {
    bool asymptotic = test.mode == CriticalMode::asymptotic;
    switch (test.kind) {
        case TestKind::simes: return simes_shortcut(conformal_pvalues(resolved), subset, alpha);
        case TestKind::storey_simes:
            return storey_simes_shortcut(conformal_pvalues(resolved), subset, alpha, test.storey_lambda);
        case TestKind::fisher:
        case TestKind::wmw:
            if (asymptotic) return separable_shortcut(resolved, test, subset, alpha);
            break;
        case TestKind::shiraishi:
            if (!table) throw Error("shiraishi test needs a score table");
            if (asymptotic) return shiraishi_shortcut(resolved, *table, subset, alpha);
            break;
        case TestKind::simes_perm: break;
    }
    if (resolved.n() > brute_force_cap)
        throw Error("test '" + test.id() + "' has no shortcut and n = " + std::to_string(resolved.n()) +
                    " exceeds the brute-force cap of " + std::to_string(brute_force_cap));
    return closed_testing_bruteforce(resolved, test, subset, alpha, std::move(table));
}

DiscoverySet closed_testing_discoveries(const ScoreSet& resolved, const LocalTestSpec& test, double alpha,
                                        std::shared_ptr<const ShiraishiTable> table) {
    DiscoverySet out;
    if (test.kind == TestKind::simes) {
        auto p = conformal_pvalues(resolved);
        int h = simes_h(p, alpha);
        for (int j = 0; j < resolved.n(); ++j)
            if (h == 0 || approx_leq(static_cast<double>(h) * p[j], alpha)) out.indices.push_back(j);
        return out;
    }
    for (int j = 0; j < resolved.n(); ++j)
        if (closed_testing_bound(resolved, test, {j}, alpha, table).d == 1) out.indices.push_back(j);
    return out;
}

BhResult bh_procedure(const Eigen::VectorXd& p, double alpha) {
    int n = static_cast<int>(p.size());
    std::vector<double> sorted(p.data(), p.data() + n);
    std::sort(sorted.begin(), sorted.end());
    BhResult r;
    r.set.kind = DiscoverySet::Kind::bh_fdr;
    for (int k = n; k >= 1; --k) {
        if (approx_leq(sorted[k - 1] * n / k, alpha)) {
            r.d_bh = k;
            break;
        }
    }
    for (int j = 0; j < n; ++j)
        if (r.d_bh > 0 && approx_leq(p[j] * n / r.d_bh, alpha)) r.set.indices.push_back(j);
    return r;
}

}  // namespace cct
