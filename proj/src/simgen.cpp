#include "cct/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cct/error.hpp"
#include "cct/special.hpp"

namespace cct {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t x = master ^ (stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

OutlierLaw OutlierLaw::parse(const std::string& text) {
    std::vector<std::string> f;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) f.push_back(part);
    try {
        if (f.size() == 2 && f[0] == "lehmann") return lehmann(std::stoi(f[1]));
        if (f.size() == 3 && f[0] == "beta") return beta(std::stod(f[1]), std::stod(f[2]));
        if (f.size() == 3 && f[0] == "normal") return normal(std::stod(f[1]), std::stod(f[2]));
    } catch (const std::exception&) {
    }
    throw Error("unknown outlier law '" + text + "'");
}

std::string OutlierLaw::id() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::lehmann: os << "lehmann:" << k; break;
        case Kind::beta: os << "beta:" << a << ":" << b; break;
        case Kind::normal: os << "normal:" << mu << ":" << sigma; break;
    }
    return os.str();
}

GeneratorSpec GeneratorSpec::gaussian_mixture() { return {}; }

GeneratorSpec GeneratorSpec::adversarial() {
    GeneratorSpec s;
    s.kind = Kind::adversarial;
    s.dim = 100;
    return s;
}

GeneratorSpec GeneratorSpec::score_level() {
    GeneratorSpec s;
    s.kind = Kind::score_level;
    s.n_cal = 500;
    s.n_test = 200;
    s.dim = 1;
    return s;
}

std::string GeneratorSpec::kind_name() const {
    switch (kind) {
        case Kind::gaussian_mixture: return "gaussian_mixture";
        case Kind::adversarial: return "adversarial";
        case Kind::score_level: return "score_level";
    }
    return "?";
}

namespace {

void check_counts(const GeneratorSpec& s) {
    if (s.n_train < 0 || s.n_cal < 1 || s.n_tune < 0 || s.n_test < 1) throw Error("invalid block sizes");
    if (s.n_outliers < 0 || s.n_outliers > s.n_test) throw Error("outlier count must lie in [0, test count]");
    if (s.dim < 1) throw Error("dimension must be >= 1");
}

// Random outlier positions inside the test block.
std::vector<char> outlier_flags(const GeneratorSpec& s) {
    std::vector<int> idx(s.n_test);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(derive_seed(s.seed, 7));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<char> flags(s.n_test, 0);
    for (int t = 0; t < s.n_outliers; ++t) flags[idx[t]] = 1;
    return flags;
}

FeatureMatrix layout(const GeneratorSpec& s) {
    FeatureMatrix f;
    int rows = s.n_train + s.n_cal + s.n_tune + s.n_test;
    f.x.resize(rows, s.dim);
    f.roles.reserve(rows);
    f.roles.insert(f.roles.end(), s.n_train, Role::train);
    f.roles.insert(f.roles.end(), s.n_cal, Role::calibration);
    f.roles.insert(f.roles.end(), s.n_tune, Role::tune);
    f.roles.insert(f.roles.end(), s.n_test, Role::test);
    f.outlier.assign(rows, 0);
    auto flags = outlier_flags(s);
    int first_test = rows - s.n_test;
    for (int j = 0; j < s.n_test; ++j) f.outlier[first_test + j] = flags[j];
    return f;
}

Eigen::MatrixXd normal_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) m(i, c) = z(rng);
    return m;
}

double draw_inlier(InlierLaw law, std::mt19937_64& rng) {
    if (law == InlierLaw::uniform01) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double draw_outlier(const GeneratorSpec& s, std::mt19937_64& rng) {
    const auto& law = s.outlier_law;
    switch (law.kind) {
        case OutlierLaw::Kind::lehmann: {
            double best = draw_inlier(s.inlier_law, rng);
            for (int t = 1; t < law.k; ++t) best = std::max(best, draw_inlier(s.inlier_law, rng));
            return best;
        }
        case OutlierLaw::Kind::beta: {
            std::gamma_distribution<double> ga(law.a, 1.0), gb(law.b, 1.0);
            double x = ga(rng), y = gb(rng);
            double u = x / (x + y);
            return s.inlier_law == InlierLaw::uniform01 ? u : normal_quantile(u);
        }
        case OutlierLaw::Kind::normal: return std::normal_distribution<double>(law.mu, law.sigma)(rng);
    }
    return 0.0;
}

}  // namespace

FeatureMatrix gen_gaussian_mixture(const GeneratorSpec& s) {
    check_counts(s);
    if (s.atoms < 1) throw Error("atom count must be >= 1");
    std::mt19937_64 atom_rng(derive_seed(s.seed, 1));
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    Eigen::MatrixXd atoms(s.atoms, s.dim);
    for (int i = 0; i < s.atoms; ++i)
        for (int c = 0; c < s.dim; ++c) atoms(i, c) = box(atom_rng);

    FeatureMatrix f = layout(s);
    std::mt19937_64 rng(derive_seed(s.seed, 2));
    std::uniform_int_distribution<int> pick(0, s.atoms - 1);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < f.rows(); ++i) {
        double scale = std::sqrt(f.outlier[i] ? s.a_outlier : s.a_inlier);
        int w = pick(rng);
        for (int c = 0; c < s.dim; ++c) f.x(i, c) = scale * z(rng) + atoms(w, c);
    }
    return f;
}

FeatureMatrix gen_adversarial(const GeneratorSpec& s) {
    check_counts(s);
    if (s.candidates < 1) throw Error("candidates must be >= 1");
    std::mt19937_64 adv_rng(derive_seed(s.seed, 3));
    Eigen::MatrixXd adv_train = normal_matrix(s.adversary_train, s.dim, adv_rng);
    Eigen::MatrixXd holdout = normal_matrix(s.adversary_holdout, s.dim, adv_rng);
    Eigen::VectorXd hold_scores = score_oneclass_knn(adv_train, holdout, s.adversary_k);
    std::vector<double> sorted(hold_scores.data(), hold_scores.data() + hold_scores.size());
    std::sort(sorted.begin(), sorted.end());
    double pos = s.quantile_level * (sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double threshold = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);

    FeatureMatrix f = layout(s);
    std::mt19937_64 rng(derive_seed(s.seed, 4));
    for (int i = 0; i < f.rows(); ++i) {
        if (!f.outlier[i]) {
            f.x.row(i) = normal_matrix(1, s.dim, rng);
            continue;
        }
        Eigen::MatrixXd cand = normal_matrix(s.candidates, s.dim, rng);
        Eigen::VectorXd sc = score_oneclass_knn(adv_train, cand, s.adversary_k);
        Eigen::Index best = 0;
        (sc.array() - threshold).abs().minCoeff(&best);
        f.x.row(i) = cand.row(best);
    }
    return f;
}

GeneratedScores gen_score_level(const GeneratorSpec& s) {
    check_counts(s);
    std::mt19937_64 rng(derive_seed(s.seed, 5));
    Eigen::VectorXd cal(s.n_cal), test(s.n_test);
    for (int i = 0; i < s.n_cal; ++i) cal[i] = draw_inlier(s.inlier_law, rng);
    auto flags = outlier_flags(s);
    for (int j = 0; j < s.n_test; ++j) test[j] = flags[j] ? draw_outlier(s, rng) : draw_inlier(s.inlier_law, rng);
    return {make_score_set(cal, test), flags};
}

FeatureMatrix gen_score_level_features(const GeneratorSpec& s) {
    check_counts(s);
    GeneratorSpec one = s;
    one.dim = 1;
    FeatureMatrix f = layout(one);
    std::mt19937_64 rng(derive_seed(s.seed, 6));
    for (int i = 0; i < f.rows(); ++i) f.x(i, 0) = f.outlier[i] ? draw_outlier(s, rng) : draw_inlier(s.inlier_law, rng);
    return f;
}

FeatureMatrix generate_features(const GeneratorSpec& spec) {
    switch (spec.kind) {
        case GeneratorSpec::Kind::gaussian_mixture: return gen_gaussian_mixture(spec);
        case GeneratorSpec::Kind::adversarial: return gen_adversarial(spec);
        case GeneratorSpec::Kind::score_level: return gen_score_level_features(spec);
    }
    throw Error("unknown generator");
}

}  // namespace cct
