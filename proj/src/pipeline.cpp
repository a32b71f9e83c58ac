#include "cct/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cct/error.hpp"
#include "cct/simgen.hpp"

namespace cct {

SubsetSpec SubsetSpec::top(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw Error("top fraction must lie in (0,1]");
    SubsetSpec s;
    s.kind = Kind::top_fraction;
    s.q = q;
    return s;
}

SubsetSpec SubsetSpec::parse(const std::string& text) {
    if (text == "all") return all();
    if (text.rfind("top:", 0) == 0) {
        std::size_t used = 0;
        double q = 0.0;
        try {
            q = std::stod(text.substr(4), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() - 4) throw Error("bad subset spec '" + text + "'");
        return top(q);
    }
    if (text.rfind("list:", 0) == 0) {
        std::vector<int> idx;
        std::stringstream ss(text.substr(5));
        std::string part;
        while (std::getline(ss, part, ',')) {
            std::size_t used = 0;
            int v = -1;
            try {
                v = std::stoi(part, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != part.size() || v < 0) throw Error("bad index '" + part + "' in subset spec");
            idx.push_back(v);
        }
        if (idx.empty()) throw Error("empty subset list");
        return list(std::move(idx));
    }
    throw Error("unknown subset spec '" + text + "'");
}

std::string SubsetSpec::str() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::all: os << "all"; break;
        case Kind::top_fraction: os << "top:" << q; break;
        case Kind::explicit_indices:
            os << "list:";
            for (std::size_t t = 0; t < indices.size(); ++t) os << (t ? "," : "") << indices[t];
            break;
    }
    return os.str();
}

std::vector<int> resolve_subset(const SubsetSpec& spec, const Eigen::VectorXd& test_scores, Orientation orientation) {
    int n = static_cast<int>(test_scores.size());
    switch (spec.kind) {
        case SubsetSpec::Kind::all: return all_indices(n);
        case SubsetSpec::Kind::explicit_indices: {
            std::vector<int> idx = spec.indices;
            std::sort(idx.begin(), idx.end());
            if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) throw Error("duplicate subset index");
            for (int j : idx)
                if (j < 0 || j >= n) throw Error("subset index " + std::to_string(j) + " out of range");
            return idx;
        }
        case SubsetSpec::Kind::top_fraction: {
            double want = spec.q * n;
            if (want < 1.0 - 1e-12) throw Error("top fraction selects fewer than one test point");
            int count = std::min(n, static_cast<int>(std::ceil(want - 1e-9)));
            auto order = all_indices(n);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return orientation == Orientation::inlier_high ? test_scores[a] < test_scores[b]
                                                               : test_scores[a] > test_scores[b];
            });
            order.resize(count);
            std::sort(order.begin(), order.end());
            return order;
        }
    }
    return {};
}

namespace {

Direction declared_direction(const GDescriptor& g) {
    if (g.kind == GDescriptor::Kind::beta && g.a <= 1.0 && g.b >= 1.0 && !(g.a == 1.0 && g.b == 1.0))
        return Direction::decreasing;
    return Direction::increasing;
}

ScoreSet with_jitter(const ScoreSet& s, std::uint64_t seed) {
    ScoreSet out = s;
    if (out.tie_policy.kind == TiePolicy::Kind::jitter) out.tie_policy.seed = seed;
    return out;
}

}  // namespace

CellResult evaluate_cell(const ScoreSet& scores, const LocalTestSpec& test, const std::vector<int>& subset,
                         double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
    ScoreSet resolved = apply_tie_policy(with_jitter(scores, derive_seed(seed, 11)));
    CellResult out;
    if (test.kind != TestKind::shiraishi) {
        out.bound = closed_testing_bound(resolved, test, subset, alpha);
        return out;
    }
    if (!test.estimate_g) {
        auto table = std::make_shared<ShiraishiTable>(test.g, resolved.m(), resolved.n(), declared_direction(test.g),
                                                      test.mc_samples, derive_seed(seed, 13));
        out.bound = closed_testing_bound(resolved, test, subset, alpha, table);
        return out;
    }

    out.g_estimated = true;
    try {
        out.g_hat = estimate_g_hat(resolved, derive_seed(seed, 12));
    } catch (const Error&) {
        // without an estimate the test keeps every null, which is trivially valid
        out.g_failed = true;
        out.bound.subset = subset;
        out.bound.alpha = alpha;
        out.bound.test_id = test.id();
        out.bound.method = BoundMethod::shiraishi_shortcut;
        return out;
    }
    ScoreSet reduced = resolved;
    const auto& rest = out.g_hat.split.remaining_calibration;
    reduced.calibration.resize(static_cast<Eigen::Index>(rest.size()));
    for (std::size_t i = 0; i < rest.size(); ++i) reduced.calibration[i] = resolved.calibration[rest[i]];
    auto table = std::make_shared<ShiraishiTable>(out.g_hat.g(), reduced.m(), reduced.n(), out.g_hat.direction);
    LocalTestSpec fixed = test;
    fixed.g = out.g_hat.g();
    out.bound = closed_testing_bound(reduced, fixed, subset, alpha, table);
    out.bound.test_id = test.id();
    return out;
}

DiscoveryBound run_fixed(const ScoreSet& scores, const LocalTestSpec& test, const SubsetSpec& subset, double alpha,
                         std::uint64_t seed) {
    auto s = resolve_subset(subset, scores.test, Orientation::outlier_high);
    auto b = evaluate_cell(scores, test, s, alpha, seed).bound;
    b.subset_spec = subset.str();
    return b;
}

std::vector<ScoreSet> score_grid(const Eigen::MatrixXd& train, const Eigen::MatrixXd& calibration,
                                 const Eigen::MatrixXd& test, const std::vector<ScorerSpec>& scorers) {
    Eigen::MatrixXd pooled(calibration.rows() + test.rows(), calibration.cols());
    pooled.topRows(calibration.rows()) = calibration;
    pooled.bottomRows(test.rows()) = test;

    std::vector<int> oc_k, pu_k;
    for (const auto& s : scorers) {
        if (s.kind == ScorerSpec::Kind::oneclass_knn) oc_k.push_back(s.k);
        if (s.kind == ScorerSpec::Kind::binary_pu_knn) pu_k.push_back(s.k);
        if (s.kind == ScorerSpec::Kind::external_file)
            throw Error("external score files are used directly, not as a feature scorer");
    }
    Eigen::MatrixXd oc, pu;
    if (!oc_k.empty()) oc = score_oneclass_knn(train, pooled, oc_k);
    if (!pu_k.empty()) pu = score_binary_pu_knn(train, pooled, pu_k);

    std::vector<ScoreSet> out;
    std::size_t oc_i = 0, pu_i = 0;
    Eigen::Index m = calibration.rows();
    for (const auto& s : scorers) {
        Eigen::VectorXd v;
        switch (s.kind) {
            case ScorerSpec::Kind::oneclass_knn: v = -oc.col(oc_i++); break;
            case ScorerSpec::Kind::binary_pu_knn: v = -pu.col(pu_i++); break;
            case ScorerSpec::Kind::raw_feature: v = pooled.col(0); break;
            case ScorerSpec::Kind::external_file: break;
        }
        out.push_back(make_score_set(v.head(m), v.tail(pooled.rows() - m)));
    }
    return out;
}

namespace {

// Tune rows, when present, are extra training data outside the adaptive procedure.
std::vector<int> training_rows(const FeatureMatrix& data) {
    auto rows = data.indices(Role::train);
    auto tune = data.indices(Role::tune);
    rows.insert(rows.end(), tune.begin(), tune.end());
    return rows;
}

}  // namespace

DiscoveryBound run_fixed(const FeatureMatrix& data, const ScorerSpec& scorer, const LocalTestSpec& test,
                         const SubsetSpec& subset, double alpha, std::uint64_t seed) {
    validate(data);
    Eigen::MatrixXd train = data.rows_of(training_rows(data));
    auto scores = score_grid(train, data.block(Role::calibration), data.block(Role::test), {scorer});
    return run_fixed(scores.front(), test, subset, alpha, seed);
}

namespace {

struct Blocks {
    std::vector<int> train, tune, cal, test;
};

Blocks blocks_of(const FeatureMatrix& data) {
    validate(data);
    Blocks b{data.indices(Role::train), data.indices(Role::tune), data.indices(Role::calibration),
             data.indices(Role::test)};
    if (b.train.empty() || b.tune.empty() || b.cal.empty() || b.test.empty())
        throw Error("adaptive selection needs non-empty train, tune, calibration and test blocks");
    return b;
}

void check_grids(const std::vector<ScorerSpec>& scorers, const std::vector<LocalTestSpec>& tests) {
    if (scorers.empty() || tests.empty()) throw Error("scorer and test grids must be non-empty");
}

// Subset of the tuning block D~test for a subset spec given on the test set. Test j sits at
// position n_cal + j of the block before canonical reordering.
std::vector<int> tuning_subset(const SubsetSpec& spec, const Eigen::VectorXd& block_scores, int n_cal,
                               const std::vector<int>& position_of) {
    if (spec.kind == SubsetSpec::Kind::explicit_indices) {
        std::vector<int> idx;
        for (int j : spec.indices) idx.push_back(position_of.at(n_cal + j));
        std::sort(idx.begin(), idx.end());
        return idx;
    }
    return resolve_subset(spec, block_scores, Orientation::outlier_high);
}

bool better(int d, double p, int best_d, double best_p) { return d > best_d || (d == best_d && p < best_p); }

}  // namespace

std::vector<TuningCell> acode_tuning_table(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                                           const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset,
                                           double alpha, std::uint64_t seed) {
    check_grids(scorers, tests);
    Blocks b = blocks_of(data);
    if (subset.kind == SubsetSpec::Kind::explicit_indices)
        for (int j : subset.indices)
            if (j < 0 || j >= static_cast<int>(b.test.size())) throw Error("subset index out of range");

    // D~test as an unordered block: rows are put in a canonical order before anything reads them
    std::vector<int> block = b.cal;
    block.insert(block.end(), b.test.begin(), b.test.end());
    std::vector<int> order(block.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) {
        const auto ru = data.x.row(block[u]);
        const auto rv = data.x.row(block[v]);
        for (Eigen::Index c = 0; c < ru.size(); ++c)
            if (ru[c] != rv[c]) return ru[c] < rv[c];
        return false;
    });
    std::vector<int> canonical(block.size()), position_of(block.size());
    for (std::size_t t = 0; t < order.size(); ++t) {
        canonical[t] = block[order[t]];
        position_of[order[t]] = static_cast<int>(t);
    }

    auto scores = score_grid(data.rows_of(b.train), data.rows_of(b.tune), data.rows_of(canonical), scorers);
    std::vector<TuningCell> table;
    std::uint64_t tune_seed = derive_seed(seed, 21);
    for (std::size_t k = 0; k < scorers.size(); ++k) {
        auto s = tuning_subset(subset, scores[k].test, static_cast<int>(b.cal.size()), position_of);
        for (const auto& t : tests) {
            auto cell = evaluate_cell(scores[k], t, s, alpha, tune_seed);
            table.push_back({scorers[k].id(), t.id(), cell.bound.d, cell.bound.pvalue});
        }
    }
    return table;
}

AcodeResult run_acode(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                      const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset, double alpha,
                      std::uint64_t seed) {
    check_grids(scorers, tests);
    Blocks b = blocks_of(data);
    AcodeResult r;
    r.seed = seed;
    r.n_train = static_cast<int>(b.train.size());
    r.n_tune = static_cast<int>(b.tune.size());
    r.n_cal = static_cast<int>(b.cal.size());
    r.n_test = static_cast<int>(b.test.size());
    for (const auto& s : scorers) r.scorer_grid.push_back(s.id());
    for (const auto& t : tests) r.test_grid.push_back(t.id());

    r.tuning_table = acode_tuning_table(data, scorers, tests, subset, alpha, seed);
    std::size_t best = 0;
    for (std::size_t c = 1; c < r.tuning_table.size(); ++c)
        if (better(r.tuning_table[c].d, r.tuning_table[c].pvalue, r.tuning_table[best].d, r.tuning_table[best].pvalue))
            best = c;
    r.selected_scorer = scorers[best / tests.size()];
    r.selected_test = tests[best % tests.size()];

    std::vector<int> train = b.train;
    train.insert(train.end(), b.tune.begin(), b.tune.end());
    auto scores = score_grid(data.rows_of(train), data.rows_of(b.cal), data.rows_of(b.test), {r.selected_scorer});
    std::uint64_t final_seed = derive_seed(seed, 22);
    auto s = resolve_subset(subset, scores.front().test, Orientation::outlier_high);
    r.bound = evaluate_cell(scores.front(), r.selected_test, s, alpha, final_seed).bound;
    r.bound.subset_spec = subset.str();
    r.bound.test_id = r.selected_scorer.id() + "/" + r.selected_test.id();
    if (subset.kind == SubsetSpec::Kind::all) {
        r.global_pvalue = r.bound.pvalue;
    } else {
        r.global_pvalue =
            evaluate_cell(scores.front(), r.selected_test, all_indices(scores.front().n()), alpha, final_seed)
                .bound.pvalue;
    }
    return r;
}

DiscoveryBound run_cherry_picking(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                                  const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset, double alpha,
                                  std::uint64_t seed) {
    check_grids(scorers, tests);
    validate(data);
    auto scores = score_grid(data.rows_of(training_rows(data)), data.block(Role::calibration),
                             data.block(Role::test), scorers);
    std::uint64_t final_seed = derive_seed(seed, 22);
    DiscoveryBound best;
    bool have = false;
    for (std::size_t k = 0; k < scorers.size(); ++k) {
        auto s = resolve_subset(subset, scores[k].test, Orientation::outlier_high);
        for (const auto& t : tests) {
            auto b = evaluate_cell(scores[k], t, s, alpha, final_seed).bound;
            if (!have || better(b.d, b.pvalue, best.d, best.pvalue)) {
                best = b;
                best.test_id = scorers[k].id() + "/" + t.id();
                have = true;
            }
        }
    }
    best.subset_spec = subset.str();
    best.valid = false;
    best.test_id = "INVALID cherry_picking " + best.test_id;
    return best;
}

std::vector<ScorerSpec> default_scorer_grid() {
    return {ScorerSpec::oneclass(5),   ScorerSpec::oneclass(10),  ScorerSpec::oneclass(20),
            ScorerSpec::binary_pu(11), ScorerSpec::binary_pu(21), ScorerSpec::binary_pu(31)};
}

std::vector<LocalTestSpec> default_test_grid(bool with_estimated_g) {
    std::vector<LocalTestSpec> t{LocalTestSpec::simes(), LocalTestSpec::storey(), LocalTestSpec::fisher(),
                                 LocalTestSpec::wmw(), LocalTestSpec::shiraishi(GDescriptor::lehmann(3))};
    if (with_estimated_g) t.push_back(LocalTestSpec::shiraishi_estimated());
    return t;
}

}  // namespace cct
