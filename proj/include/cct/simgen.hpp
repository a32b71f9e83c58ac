#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cct/scores.hpp"
#include "cct/scoring.hpp"

namespace cct {

struct OutlierLaw {
    enum class Kind { lehmann, beta, normal };
    Kind kind = Kind::lehmann;
    int k = 3;
    double a = 1.0, b = 1.0;
    double mu = 0.0, sigma = 1.0;

    static OutlierLaw lehmann(int k) { return {Kind::lehmann, k, 1.0, 1.0, 0.0, 1.0}; }
    static OutlierLaw beta(double a, double b) { return {Kind::beta, 3, a, b, 0.0, 1.0}; }
    static OutlierLaw normal(double mu, double sigma) { return {Kind::normal, 3, 1.0, 1.0, mu, sigma}; }
    static OutlierLaw parse(const std::string& text);  // lehmann:k | beta:a:b | normal:mu:sigma
    std::string id() const;
};

enum class InlierLaw { uniform01, std_normal };

struct GeneratorSpec {
    enum class Kind { gaussian_mixture, adversarial, score_level };
    Kind kind = Kind::gaussian_mixture;
    std::uint64_t seed = 0;
    int n_train = 1000;
    int n_cal = 750;
    int n_tune = 250;
    int n_test = 1000;
    int n_outliers = 0;

    double a_inlier = 1.0;
    double a_outlier = 0.7;
    int dim = 1000;
    int atoms = 1000;

    int candidates = 3;
    double quantile_level = 0.5;
    int adversary_train = 1000;
    int adversary_holdout = 1000;
    int adversary_k = 5;

    InlierLaw inlier_law = InlierLaw::uniform01;
    OutlierLaw outlier_law;

    static GeneratorSpec gaussian_mixture();
    static GeneratorSpec adversarial();
    static GeneratorSpec score_level();
    std::string kind_name() const;
};

struct GeneratedScores {
    ScoreSet scores;
    std::vector<char> outlier;  // per test point
};

FeatureMatrix gen_gaussian_mixture(const GeneratorSpec& spec);
FeatureMatrix gen_adversarial(const GeneratorSpec& spec);
GeneratedScores gen_score_level(const GeneratorSpec& spec);
// Score-level draws laid out as one feature column with all four roles.
FeatureMatrix gen_score_level_features(const GeneratorSpec& spec);
FeatureMatrix generate_features(const GeneratorSpec& spec);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace cct
