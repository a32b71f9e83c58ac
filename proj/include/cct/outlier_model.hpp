#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cct/scores.hpp"
#include "cct/shiraishi.hpp"

namespace cct {

struct BetaParams {
    double a = 1.0;
    double b = 1.0;
};

struct DilutionSplit {
    std::vector<int> reference_half;   // calibration indices used to fit the inlier law
    std::vector<int> remaining_calibration;
    std::uint64_t seed = 0;
    int m1() const { return static_cast<int>(reference_half.size()); }
};

struct MixtureFit {
    double theta1 = 0.5;
    BetaParams outlier;
    int iterations = 0;
    double loglik = 0.0;
};

struct MonotoneDensity {
    std::vector<double> values;
    Direction direction = Direction::increasing;
    double rss_increasing = 0.0;
    double rss_decreasing = 0.0;
};

struct OutlierDistribution {
    BetaParams inlier_beta;
    BetaParams outlier_beta;
    double theta1_hat = 0.0;
    std::vector<double> monotone_density;
    Direction direction = Direction::increasing;
    DilutionSplit split;
    bool rescaled = false;
    double rescale_lo = 0.0;
    double rescale_hi = 1.0;

    GDescriptor g() const { return GDescriptor::piecewise(monotone_density); }
};

DilutionSplit dilution_split(int m, std::uint64_t seed);
DilutionSplit dilution_split(const ScoreSet& s, std::uint64_t seed);

// Weighted Beta MLE by damped Newton; values are clamped to [lo, hi] first.
BetaParams beta_mle(const std::vector<double>& sample, const std::vector<double>& weights = {}, double lo = 0.001,
                    double hi = 0.999);

// (1 - theta) Uniform(0,1) + theta Beta(a, b) by EM.
MixtureFit mixture_fit(std::vector<double> sample);

// Least-squares non-decreasing fit (pool adjacent violators).
std::vector<double> pava_increasing(const std::vector<double>& y);

MonotoneDensity monotonize_density(const BetaParams& beta, int grid_size = 512);

OutlierDistribution estimate_g_hat(const ScoreSet& s, std::uint64_t seed);

// Outlier fraction of the diluted block when theta n of the n test points are outliers.
double diluted_outlier_fraction(double theta, int n, int m, int m1);

}  // namespace cct
