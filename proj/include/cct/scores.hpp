#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cct {

// Scores are stored outlier-high: a large test score is evidence against the inlier null,
// p_j = (1 + #{X_i >= Y_j}) / (m + 1).
struct TiePolicy {
    enum class Kind { jitter, strict };
    Kind kind = Kind::jitter;
    std::uint64_t seed = 0;
    double magnitude = 0.0;  // 0 selects 1e-9 * score range

    static TiePolicy strict_policy() { return {Kind::strict, 0, 0.0}; }
    static TiePolicy jitter_policy(std::uint64_t seed, double magnitude = 0.0) {
        return {Kind::jitter, seed, magnitude};
    }
};

struct ScoreSet {
    Eigen::VectorXd calibration;
    Eigen::VectorXd test;
    TiePolicy tie_policy;

    int m() const { return static_cast<int>(calibration.size()); }
    int n() const { return static_cast<int>(test.size()); }
};

struct RankVector {
    std::vector<int> ranks;
    int pool_size = 0;
};

ScoreSet make_score_set(Eigen::VectorXd calibration, Eigen::VectorXd test, TiePolicy policy = {});
void validate(const ScoreSet& s);

ScoreSet apply_tie_policy(const ScoreSet& s);
Eigen::VectorXd conformal_pvalues(const ScoreSet& s);
RankVector ranks_in_pool(const ScoreSet& s, const std::vector<int>& subset);

// #{i : X_i < Y_j} for every test point
std::vector<int> count_below(const ScoreSet& s);

ScoreSet read_score_csv(const std::string& path);
void write_score_csv(const ScoreSet& s, const std::string& path);

}  // namespace cct
