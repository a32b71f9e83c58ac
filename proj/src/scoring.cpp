#include "cct/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "cct/error.hpp"
#include "csv.hpp"

namespace cct {

const char* to_string(Role r) {
    switch (r) {
        case Role::train: return "train";
        case Role::calibration: return "calibration";
        case Role::tune: return "tune";
        case Role::test: return "test";
    }
    return "?";
}

Role parse_role(const std::string& s) {
    if (s == "train") return Role::train;
    if (s == "calibration") return Role::calibration;
    if (s == "tune") return Role::tune;
    if (s == "test") return Role::test;
    throw Error("unknown role '" + s + "'");
}

std::vector<int> FeatureMatrix::indices(Role r) const {
    std::vector<int> out;
    for (int i = 0; i < rows(); ++i)
        if (roles[i] == r) out.push_back(i);
    return out;
}

Eigen::MatrixXd FeatureMatrix::rows_of(const std::vector<int>& idx) const {
    Eigen::MatrixXd out(idx.size(), x.cols());
    for (std::size_t t = 0; t < idx.size(); ++t) out.row(t) = x.row(idx[t]);
    return out;
}

Eigen::MatrixXd FeatureMatrix::block(Role r) const { return rows_of(indices(r)); }

void validate(const FeatureMatrix& f) {
    if (f.cols() < 1) throw Error("feature matrix needs at least one column");
    if (static_cast<int>(f.roles.size()) != f.rows()) throw Error("one role per row required");
    if (!f.outlier.empty() && static_cast<int>(f.outlier.size()) != f.rows())
        throw Error("outlier labels must cover every row");
    if (!f.x.allFinite()) throw Error("non-finite feature value");
}

ScorerSpec ScorerSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    auto k_of = [&](int def) {
        if (arg.empty()) return def;
        std::size_t used = 0;
        int k = 0;
        try {
            k = std::stoi(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != arg.size() || k < 1) throw Error("bad k in scorer spec '" + text + "'");
        return k;
    };
    if (head == "oneclass") return oneclass(k_of(5));
    if (head == "pu") return binary_pu(k_of(11));
    if (head == "raw" && arg.empty()) return raw();
    if (head == "file" && !arg.empty()) return external(arg);
    throw Error("unknown scorer spec '" + text + "'");
}

std::string ScorerSpec::id() const {
    switch (kind) {
        case Kind::oneclass_knn: return "oneclass:" + std::to_string(k);
        case Kind::binary_pu_knn: return "pu:" + std::to_string(k);
        case Kind::raw_feature: return "raw";
        case Kind::external_file: return "file:" + path;
    }
    return "?";
}

namespace {

struct Neighbor {
    double dist;
    int label;  // 0 = training row
    int index;
    bool operator<(const Neighbor& o) const {
        if (dist != o.dist) return dist < o.dist;
        if (label != o.label) return label < o.label;
        return index < o.index;
    }
};

int max_k(const std::vector<int>& ks) {
    if (ks.empty()) throw Error("no k requested");
    int k = *std::max_element(ks.begin(), ks.end());
    if (*std::min_element(ks.begin(), ks.end()) < 1) throw Error("k must be >= 1");
    return k;
}

}  // namespace

Eigen::MatrixXd score_oneclass_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& points,
                                   const std::vector<int>& ks) {
    int kmax = max_k(ks);
    if (train.rows() == 0) throw Error("empty training set");
    if (kmax > train.rows()) throw Error("k exceeds the training set size");
    if (train.cols() != points.cols()) throw Error("feature dimension mismatch");
    // features x observations, so each distance is a contiguous column reduction
    Eigen::MatrixXd tt = train.transpose();
    Eigen::MatrixXd out(points.rows(), ks.size());
    std::vector<Neighbor> nb(train.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        Eigen::VectorXd q = points.row(i).transpose();
        Eigen::VectorXd d2 = (tt.colwise() - q).colwise().squaredNorm().transpose();
        for (Eigen::Index t = 0; t < tt.cols(); ++t) nb[t] = {std::sqrt(d2[t]), 0, static_cast<int>(t)};
        std::partial_sort(nb.begin(), nb.begin() + kmax, nb.end());
        for (std::size_t c = 0; c < ks.size(); ++c) {
            double s = 0.0;
            for (int t = 0; t < ks[c]; ++t) s += nb[t].dist;
            out(i, c) = -s / ks[c];
        }
    }
    return out;
}

Eigen::VectorXd score_oneclass_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& points, int k) {
    return score_oneclass_knn(train, points, std::vector<int>{k}).col(0);
}

Eigen::MatrixXd score_binary_pu_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& pooled,
                                    const std::vector<int>& ks) {
    int kmax = max_k(ks);
    if (train.rows() == 0) throw Error("empty training set");
    if (train.cols() != pooled.cols()) throw Error("feature dimension mismatch");
    Eigen::Index nt = train.rows(), np = pooled.rows();
    if (kmax > nt + np - 1) throw Error("k exceeds the number of available neighbours");
    Eigen::MatrixXd all(train.cols(), nt + np);
    all.leftCols(nt) = train.transpose();
    all.rightCols(np) = pooled.transpose();
    Eigen::MatrixXd out(np, ks.size());
    std::vector<Neighbor> nb;
    nb.reserve(nt + np);
    for (Eigen::Index i = 0; i < np; ++i) {
        Eigen::VectorXd q = all.col(nt + i);
        Eigen::VectorXd d2 = (all.colwise() - q).colwise().squaredNorm().transpose();
        nb.clear();
        for (Eigen::Index t = 0; t < nt + np; ++t) {
            if (t == nt + i) continue;
            nb.push_back({std::sqrt(d2[t]), t < nt ? 0 : 1, static_cast<int>(t)});
        }
        std::partial_sort(nb.begin(), nb.begin() + kmax, nb.end());
        for (std::size_t c = 0; c < ks.size(); ++c) {
            int hits = 0;
            for (int t = 0; t < ks[c]; ++t) hits += nb[t].label == 0 ? 1 : 0;
            out(i, c) = static_cast<double>(hits) / ks[c];
        }
    }
    return out;
}

Eigen::VectorXd score_binary_pu_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& pooled, int k) {
    return score_binary_pu_knn(train, pooled, std::vector<int>{k}).col(0);
}

ScoreSet ingest_scores(const std::string& path) { return read_score_csv(path); }

FeatureMatrix read_feature_csv(const std::string& path) {
    auto in = csv::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    auto header = csv::split(line);
    int role_col = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c)
        if (header[c] == "role") role_col = c;
    if (role_col < 0) throw Error(path + ": missing role column");
    int d = static_cast<int>(header.size()) - 1;
    if (d < 1) throw Error(path + ": no feature columns");

    std::vector<double> values;
    FeatureMatrix f;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split(line);
        if (fields.size() != header.size())
            throw Error(path + ": line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields");
        if (fields[role_col].empty()) throw Error(path + ": line " + std::to_string(line_no) + ": missing role");
        try {
            f.roles.push_back(parse_role(fields[role_col]));
        } catch (const Error& e) {
            throw Error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        for (int c = 0; c < static_cast<int>(fields.size()); ++c)
            if (c != role_col) values.push_back(csv::parse_number(fields[c], line_no));
    }
    f.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(f.roles.size()), d);
    validate(f);
    return f;
}

void write_feature_csv(const FeatureMatrix& f, const std::string& path) {
    auto out = csv::open_out(path);
    out << "role";
    for (int c = 0; c < f.cols(); ++c) out << ",x" << c;
    out << '\n' << std::setprecision(17);
    for (int i = 0; i < f.rows(); ++i) {
        out << to_string(f.roles[i]);
        for (int c = 0; c < f.cols(); ++c) out << ',' << f.x(i, c);
        out << '\n';
    }
}

}  // namespace cct
