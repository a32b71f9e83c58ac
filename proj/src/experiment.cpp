#include "cct/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "cct/closed_testing.hpp"
#include "cct/compare.hpp"
#include "cct/error.hpp"

namespace cct {

SimesSizeRow simes_size_exact(int m, int l, double alpha) {
    auto stat = [m](const std::vector<int>& r) { return simes_from_ranks(r, m); };
    PermOptions opt;
    opt.mode = PermOptions::Mode::exhaustive;
    auto null = permutation_null(stat, m, l, opt);
    SimesSizeRow row;
    row.m = m;
    row.l = l;
    row.alpha_perm = perm_critical_value(null, alpha, Tail::lower);
    long simes = 0, perm = 0;
    for (double t : null.values) {
        simes += approx_leq(t, alpha);
        perm += approx_leq(t, row.alpha_perm);
    }
    auto total = static_cast<double>(null.values.size());
    row.size_simes = simes / total;
    row.size_perm = perm / total;
    return row;
}

namespace {

ScoreSet oracle_instance(std::mt19937_64& rng, int m, int n) {
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> shift(0, 3);
    Eigen::VectorXd x(m), y(n);
    for (int i = 0; i < m; ++i) x[i] = z(rng);
    for (int j = 0; j < n; ++j) y[j] = z(rng) + shift(rng);
    return make_score_set(x, y, TiePolicy::strict_policy());
}

std::vector<int> members(unsigned mask) {
    std::vector<int> v;
    for (int j = 0; mask >> j; ++j)
        if (mask >> j & 1u) v.push_back(j);
    return v;
}

}  // namespace

std::vector<OracleFamily> oracle_equivalence(int m, int n_max, int instances, double alpha, std::uint64_t seed) {
    struct Family {
        std::string name;
        LocalTestSpec spec;
    };
    std::vector<Family> families{{"simes", LocalTestSpec::simes()},
                                 {"storey", LocalTestSpec::storey()},
                                 {"shiraishi:lehmann:2", LocalTestSpec::shiraishi(GDescriptor::lehmann(2))},
                                 {"shiraishi:lehmann:3", LocalTestSpec::shiraishi(GDescriptor::lehmann(3))},
                                 {"fisher", LocalTestSpec::fisher()},
                                 {"wmw", LocalTestSpec::wmw()}};
    std::vector<OracleFamily> out(families.size());
    for (std::size_t f = 0; f < families.size(); ++f) out[f].name = families[f].name;

    std::mt19937_64 rng(seed);
    for (int inst = 0; inst < instances; ++inst) {
        int n = 1 + inst % n_max;
        ScoreSet s = oracle_instance(rng, m, n);
        Eigen::VectorXd p = conformal_pvalues(s);
        for (std::size_t f = 0; f < families.size(); ++f) {
            const auto& spec = families[f].spec;
            std::shared_ptr<const ShiraishiTable> table;
            if (spec.kind == TestKind::shiraishi) table = std::make_shared<ShiraishiTable>(spec.g, m, n);
            LocalTester tester(s, spec, table);
            BruteForceClosure closure(tester, alpha);
            auto& rec = out[f];
            ++rec.instances;
            for (unsigned mask = 1; mask < (1u << n); ++mask) {
                auto sub = members(mask);
                int shortcut = 0;
                switch (spec.kind) {
                    case TestKind::simes: shortcut = simes_shortcut(p, sub, alpha).d; break;
                    case TestKind::storey_simes:
                        shortcut = storey_simes_shortcut(p, sub, alpha, spec.storey_lambda).d;
                        break;
                    case TestKind::shiraishi: shortcut = shiraishi_shortcut(s, *table, sub, alpha).d; break;
                    default: shortcut = separable_shortcut(s, spec, sub, alpha).d; break;
                }
                int brute = closure.d(sub);
                ++rec.subsets;
                if (shortcut != brute) {
                    if (rec.mismatches == 0) {
                        std::ostringstream os;
                        os << "instance " << inst << " n=" << n << " S={";
                        for (std::size_t t = 0; t < sub.size(); ++t) os << (t ? "," : "") << sub[t];
                        os << "} shortcut=" << shortcut << " brute_force=" << brute;
                        rec.first_mismatch = os.str();
                    }
                    ++rec.mismatches;
                }
            }
        }
    }
    return out;
}

BenchMethod BenchMethod::fixed(ScorerSpec s, LocalTestSpec t) {
    BenchMethod b;
    b.kind = Kind::fixed;
    b.scorer = std::move(s);
    b.test = std::move(t);
    return b;
}

BenchMethod BenchMethod::acode(std::vector<ScorerSpec> s, std::vector<LocalTestSpec> t) {
    BenchMethod b;
    b.kind = Kind::acode;
    b.scorers = std::move(s);
    b.tests = std::move(t);
    return b;
}

BenchMethod BenchMethod::cherry_picking(std::vector<ScorerSpec> s, std::vector<LocalTestSpec> t) {
    BenchMethod b = acode(std::move(s), std::move(t));
    b.kind = Kind::cherry_picking;
    return b;
}

std::string BenchMethod::scorer_label() const {
    if (kind == Kind::fixed) return scorer.id();
    std::ostringstream os;
    os << "grid" << scorers.size() << "x" << tests.size();
    return os.str();
}

std::string BenchMethod::test_label() const {
    switch (kind) {
        case Kind::fixed: return test.id();
        case Kind::acode: return "acode";
        case Kind::cherry_picking: return "cherry_picking";
    }
    return "?";
}

std::uint64_t rep_seed(std::uint64_t master, int outliers, int rep) {
    return derive_seed(derive_seed(master, static_cast<std::uint64_t>(outliers)), static_cast<std::uint64_t>(rep));
}

std::vector<TidyRow> run_bench(const BenchConfig& cfg) {
    if (cfg.reps < 1) throw Error("repetitions must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error("alpha must lie in (0,1)");
    if (cfg.methods.empty()) throw Error("no methods to run");
    struct Task {
        int outliers;
        int rep;
    };
    std::vector<Task> tasks;
    for (int o : cfg.outlier_counts)
        for (int r = 0; r < cfg.reps; ++r) tasks.push_back({o, r});

    std::vector<std::vector<TidyRow>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string error;

    auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            try {
                GeneratorSpec g = cfg.generator;
                g.n_outliers = tasks[t].outliers;
                g.seed = rep_seed(cfg.seed, tasks[t].outliers, tasks[t].rep);
                FeatureMatrix data = generate_features(g);
                // fixed methods sharing a scorer reuse its scores within the repetition
                std::map<std::string, ScoreSet> scored;
                for (const auto& m : cfg.methods) {
                    auto start = std::chrono::steady_clock::now();
                    DiscoveryBound b;
                    switch (m.kind) {
                        case BenchMethod::Kind::fixed:
                        {
                            auto it = scored.find(m.scorer.id());
                            if (it == scored.end()) {
                                std::vector<int> rows = data.indices(Role::train), tune = data.indices(Role::tune);
                                rows.insert(rows.end(), tune.begin(), tune.end());
                                auto sc = score_grid(data.rows_of(rows), data.block(Role::calibration),
                                                     data.block(Role::test), {m.scorer});
                                it = scored.emplace(m.scorer.id(), std::move(sc.front())).first;
                            }
                            b = run_fixed(it->second, m.test, cfg.subset, cfg.alpha, g.seed);
                            break;
                        }
                        case BenchMethod::Kind::acode:
                            b = run_acode(data, m.scorers, m.tests, cfg.subset, cfg.alpha, g.seed).bound;
                            break;
                        case BenchMethod::Kind::cherry_picking:
                            b = run_cherry_picking(data, m.scorers, m.tests, cfg.subset, cfg.alpha, g.seed);
                            break;
                    }
                    std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
                    results[t].push_back({g.kind_name(), tasks[t].outliers, m.scorer_label(), m.test_label(),
                                          tasks[t].rep, b.d, b.d > 0, took.count()});
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error.empty()) error = e.what();
                next = tasks.size();
            }
        }
    };
    int jobs = std::max(1, cfg.jobs);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (!error.empty()) throw Error(error);

    std::vector<TidyRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<TidyRow>& rows) {
    std::vector<std::tuple<std::string, int, std::string, std::string>> keys;
    std::map<std::tuple<std::string, int, std::string, std::string>, std::vector<const TidyRow*>> groups;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.generator, r.outliers, r.scorer, r.test);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<AggregateRow> out;
    for (const auto& key : keys) {
        const auto& g = groups[key];
        std::vector<double> d;
        double rejects = 0, ms = 0;
        for (const auto* r : g) {
            d.push_back(r->d);
            rejects += r->reject;
            ms += r->runtime_ms;
        }
        AggregateRow a;
        std::tie(a.generator, a.outliers, a.scorer, a.test) = key;
        a.reps = static_cast<int>(g.size());
        a.median_d = quantile(d, 0.5);
        a.q90_d = quantile(d, 0.9);
        a.power = rejects / g.size();
        a.mean_runtime_ms = ms / g.size();
        out.push_back(a);
    }
    return out;
}

void write_tidy_csv(const std::vector<TidyRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "generator,outliers,scorer,test,rep,d,reject,runtime_ms\n";
    for (const auto& r : rows)
        out << r.generator << ',' << r.outliers << ',' << r.scorer << ',' << r.test << ',' << r.rep << ',' << r.d << ','
            << (r.reject ? 1 : 0) << ',' << r.runtime_ms << '\n';
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "generator,outliers,scorer,test,reps,median_d,q90_d,power,mean_runtime_ms\n";
    for (const auto& a : rows)
        out << a.generator << ',' << a.outliers << ',' << a.scorer << ',' << a.test << ',' << a.reps << ','
            << a.median_d << ',' << a.q90_d << ',' << a.power << ',' << a.mean_runtime_ms << '\n';
}

}  // namespace cct
