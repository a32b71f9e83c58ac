#include "cct/scores.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>

#include "cct/error.hpp"
#include "csv.hpp"

namespace cct {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0,1) determined by the seed, the value and how many times the value was seen.
// The jittered multiset therefore does not depend on where values sit in the vectors.
double value_noise(std::uint64_t seed, double v, std::uint64_t occurrence) {
    std::uint64_t h = splitmix(seed ^ splitmix(std::bit_cast<std::uint64_t>(v) ^ splitmix(occurrence)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) throw Error(std::string("non-finite ") + what + " score");
}

}  // namespace

void validate(const ScoreSet& s) {
    if (s.m() < 1) throw Error("empty calibration");
    if (s.n() < 1) throw Error("empty test set");
    check_finite(s.calibration, "calibration");
    check_finite(s.test, "test");
}

ScoreSet make_score_set(Eigen::VectorXd calibration, Eigen::VectorXd test, TiePolicy policy) {
    ScoreSet s{std::move(calibration), std::move(test), policy};
    validate(s);
    return s;
}

ScoreSet apply_tie_policy(const ScoreSet& s) {
    validate(s);
    std::vector<double> all(s.calibration.data(), s.calibration.data() + s.m());
    all.insert(all.end(), s.test.data(), s.test.data() + s.n());
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    bool tied = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();

    if (s.tie_policy.kind == TiePolicy::Kind::strict) {
        if (tied) throw Error("tied scores under strict policy");
        return s;
    }

    double range = sorted.back() - sorted.front();
    double mag = s.tie_policy.magnitude;
    if (mag <= 0.0) mag = 1e-9 * (range > 0.0 ? range : std::max(1.0, std::fabs(sorted.front())));

    ScoreSet out = s;
    for (std::uint64_t round = 0;; ++round) {
        std::map<double, std::uint64_t> seen;
        auto jitter = [&](double v) {
            std::uint64_t t = seen[v]++;
            return v + mag * value_noise(s.tie_policy.seed + round, v, t);
        };
        for (int i = 0; i < s.m(); ++i) out.calibration[i] = jitter(s.calibration[i]);
        for (int j = 0; j < s.n(); ++j) out.test[j] = jitter(s.test[j]);

        std::vector<double> check(out.calibration.data(), out.calibration.data() + out.m());
        check.insert(check.end(), out.test.data(), out.test.data() + out.n());
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) == check.end()) break;
        if (round > 16) throw Error("jitter failed to separate tied scores");
    }
    out.tie_policy.magnitude = mag;
    return out;
}

std::vector<int> count_below(const ScoreSet& s) {
    std::vector<double> cal(s.calibration.data(), s.calibration.data() + s.m());
    std::sort(cal.begin(), cal.end());
    std::vector<int> out(s.n());
    for (int j = 0; j < s.n(); ++j)
        out[j] = static_cast<int>(std::lower_bound(cal.begin(), cal.end(), s.test[j]) - cal.begin());
    return out;
}

Eigen::VectorXd conformal_pvalues(const ScoreSet& s) {
    validate(s);
    auto below = count_below(s);
    Eigen::VectorXd p(s.n());
    for (int j = 0; j < s.n(); ++j) p[j] = (1.0 + (s.m() - below[j])) / (s.m() + 1.0);
    return p;
}

RankVector ranks_in_pool(const ScoreSet& s, const std::vector<int>& subset) {
    if (subset.empty()) throw Error("empty subset");
    for (int j : subset)
        if (j < 0 || j >= s.n()) throw Error("subset index " + std::to_string(j) + " out of range");
    auto below = count_below(s);
    RankVector r;
    r.pool_size = s.m() + static_cast<int>(subset.size());
    std::vector<int> order(subset.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return s.test[subset[a]] < s.test[subset[b]]; });
    r.ranks.assign(subset.size(), 0);
    int seen = 0;
    for (std::size_t t = 0; t < order.size(); ++t) {
        // equal test scores share the lower rank among themselves
        if (t == 0 || s.test[subset[order[t]]] != s.test[subset[order[t - 1]]]) seen = static_cast<int>(t);
        r.ranks[order[t]] = below[subset[order[t]]] + seen + 1;
    }
    return r;
}

ScoreSet read_score_csv(const std::string& path) {
    auto in = csv::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    auto header = csv::split(line);
    int role_col = -1, score_col = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (header[c] == "role") role_col = c;
        if (header[c] == "score") score_col = c;
    }
    if (role_col < 0) throw Error(path + ": missing role column");
    if (score_col < 0) throw Error(path + ": missing score column");

    std::vector<double> cal, test;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = csv::split(line);
        if (f.size() != header.size())
            throw Error(path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields");
        double v = csv::parse_number(f[score_col], line_no);
        const auto& role = f[role_col];
        if (role == "calibration")
            cal.push_back(v);
        else if (role == "test")
            test.push_back(v);
        else if (role.empty())
            throw Error(path + ": line " + std::to_string(line_no) + ": missing role");
        else
            throw Error(path + ": line " + std::to_string(line_no) + ": unknown role '" + role + "'");
    }
    if (cal.empty()) throw Error("empty calibration");
    if (test.empty()) throw Error("empty test set");
    return make_score_set(Eigen::Map<Eigen::VectorXd>(cal.data(), cal.size()),
                          Eigen::Map<Eigen::VectorXd>(test.data(), test.size()));
}

void write_score_csv(const ScoreSet& s, const std::string& path) {
    auto out = csv::open_out(path);
    out << "role,score\n" << std::setprecision(17);
    for (int i = 0; i < s.m(); ++i) out << "calibration," << s.calibration[i] << '\n';
    for (int j = 0; j < s.n(); ++j) out << "test," << s.test[j] << '\n';
}

}  // namespace cct
