#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cct/scores.hpp"

namespace cct {

enum class Role { train, calibration, tune, test };

const char* to_string(Role r);
Role parse_role(const std::string& s);

// One observation per row.
struct FeatureMatrix {
    Eigen::MatrixXd x;
    std::vector<Role> roles;
    std::vector<char> outlier;  // ground truth when known, otherwise empty

    int rows() const { return static_cast<int>(x.rows()); }
    int cols() const { return static_cast<int>(x.cols()); }
    std::vector<int> indices(Role r) const;
    Eigen::MatrixXd block(Role r) const;
    Eigen::MatrixXd rows_of(const std::vector<int>& idx) const;
};

void validate(const FeatureMatrix& f);

struct ScorerSpec {
    enum class Kind { external_file, oneclass_knn, binary_pu_knn, raw_feature };
    Kind kind = Kind::oneclass_knn;
    int k = 5;
    std::string path;
    std::uint64_t seed = 0;

    static ScorerSpec oneclass(int k = 5) { return {Kind::oneclass_knn, k, {}, 0}; }
    static ScorerSpec binary_pu(int k = 11) { return {Kind::binary_pu_knn, k, {}, 0}; }
    static ScorerSpec raw() { return {Kind::raw_feature, 1, {}, 0}; }
    static ScorerSpec external(std::string path) { return {Kind::external_file, 1, std::move(path), 0}; }

    // oneclass[:k] | pu[:k] | raw | file:path
    static ScorerSpec parse(const std::string& text);
    std::string id() const;
    // kNN scorers report conformity (high = inlier-like); raw features and score files are outlier-high
    bool inlier_high() const { return kind == Kind::oneclass_knn || kind == Kind::binary_pu_knn; }
};

// -(mean distance to the k nearest training rows), one column per requested k.
Eigen::MatrixXd score_oneclass_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& points,
                                   const std::vector<int>& ks);
Eigen::VectorXd score_oneclass_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& points, int k = 5);

// Fraction of the k nearest neighbours in train u pooled (self excluded) that are training rows,
// computed for every pooled row.
Eigen::MatrixXd score_binary_pu_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& pooled,
                                    const std::vector<int>& ks);
Eigen::VectorXd score_binary_pu_knn(const Eigen::MatrixXd& train, const Eigen::MatrixXd& pooled, int k = 11);

ScoreSet ingest_scores(const std::string& path);

FeatureMatrix read_feature_csv(const std::string& path);
void write_feature_csv(const FeatureMatrix& f, const std::string& path);

}  // namespace cct
