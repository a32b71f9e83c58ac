#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cct/closed_testing.hpp"
#include "cct/local_tests.hpp"
#include "cct/outlier_model.hpp"
#include "cct/scores.hpp"
#include "cct/scoring.hpp"

namespace cct {

struct SubsetSpec {
    enum class Kind { all, explicit_indices, top_fraction };
    Kind kind = Kind::all;
    std::vector<int> indices;
    double q = 1.0;

    static SubsetSpec all() { return {}; }
    static SubsetSpec list(std::vector<int> idx) { return {Kind::explicit_indices, std::move(idx), 1.0}; }
    static SubsetSpec top(double q);
    // all | top:q | list:i,j,...   (0-based indices)
    static SubsetSpec parse(const std::string& text);
    std::string str() const;
};

enum class Orientation { inlier_high, outlier_high };

// top:q keeps the ceil(q n) most outlier-like scores, ties by index.
std::vector<int> resolve_subset(const SubsetSpec& spec, const Eigen::VectorXd& test_scores,
                                Orientation orientation = Orientation::inlier_high);

struct CellResult {
    DiscoveryBound bound;
    bool g_estimated = false;
    bool g_failed = false;
    OutlierDistribution g_hat;
};

// Closed-testing bound for outlier-high scores: applies the tie policy, estimates g when requested and
// dispatches to the matching shortcut. S is already resolved.
CellResult evaluate_cell(const ScoreSet& scores, const LocalTestSpec& test, const std::vector<int>& subset,
                         double alpha, std::uint64_t seed);

DiscoveryBound run_fixed(const ScoreSet& scores, const LocalTestSpec& test, const SubsetSpec& subset, double alpha,
                         std::uint64_t seed = 0);
DiscoveryBound run_fixed(const FeatureMatrix& data, const ScorerSpec& scorer, const LocalTestSpec& test,
                         const SubsetSpec& subset, double alpha, std::uint64_t seed = 0);

// Outlier-high score sets for every scorer; calibration and test rows are scored with the same model.
std::vector<ScoreSet> score_grid(const Eigen::MatrixXd& train, const Eigen::MatrixXd& calibration,
                                 const Eigen::MatrixXd& test, const std::vector<ScorerSpec>& scorers);

struct TuningCell {
    std::string scorer;
    std::string test;
    int d = 0;
    double pvalue = 1.0;
};

struct AcodeResult {
    ScorerSpec selected_scorer;
    LocalTestSpec selected_test;
    DiscoveryBound bound;
    double global_pvalue = 1.0;
    std::vector<TuningCell> tuning_table;
    std::uint64_t seed = 0;
    std::vector<std::string> scorer_grid;
    std::vector<std::string> test_grid;
    int n_train = 0, n_tune = 0, n_cal = 0, n_test = 0;
};

AcodeResult run_acode(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                      const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset, double alpha,
                      std::uint64_t seed = 0);

// Tuning-stage table alone (D~test = calibration u test as one unordered block).
std::vector<TuningCell> acode_tuning_table(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                                           const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset,
                                           double alpha, std::uint64_t seed = 0);

// Maximum d over the whole grid on the final configuration. Not a valid procedure.
DiscoveryBound run_cherry_picking(const FeatureMatrix& data, const std::vector<ScorerSpec>& scorers,
                                  const std::vector<LocalTestSpec>& tests, const SubsetSpec& subset, double alpha,
                                  std::uint64_t seed = 0);

std::vector<ScorerSpec> default_scorer_grid();
std::vector<LocalTestSpec> default_test_grid(bool with_estimated_g = true);

}  // namespace cct
