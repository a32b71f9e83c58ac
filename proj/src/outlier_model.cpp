#include "cct/outlier_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "cct/error.hpp"
#include "cct/special.hpp"

namespace cct {

DilutionSplit dilution_split(int m, std::uint64_t seed) {
    if (m < 4) throw Error("dilution split needs m >= 4");
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    int m1 = (m + 1) / 2;
    DilutionSplit s;
    s.seed = seed;
    s.reference_half.assign(idx.begin(), idx.begin() + m1);
    s.remaining_calibration.assign(idx.begin() + m1, idx.end());
    std::sort(s.reference_half.begin(), s.reference_half.end());
    std::sort(s.remaining_calibration.begin(), s.remaining_calibration.end());
    return s;
}

DilutionSplit dilution_split(const ScoreSet& s, std::uint64_t seed) { return dilution_split(s.m(), seed); }

namespace {

BetaParams moments(double mean, double var) {
    if (!(var > 0.0) || !(mean > 0.0 && mean < 1.0) || var >= mean * (1.0 - mean)) return {1.0, 1.0};
    double c = mean * (1.0 - mean) / var - 1.0;
    return {mean * c, (1.0 - mean) * c};
}

// Beta MLE from the sufficient statistics s1 = E_w[log x], s2 = E_w[log(1 - x)].
BetaParams beta_newton(double s1, double s2, BetaParams start) {
    auto objective = [&](double a, double b) { return (a - 1.0) * s1 + (b - 1.0) * s2 - log_beta(a, b); };
    double a = start.a, b = start.b;
    for (int it = 0; it < 200; ++it) {
        double pab = digamma(a + b);
        double g1 = s1 - digamma(a) + pab;
        double g2 = s2 - digamma(b) + pab;
        if (std::hypot(g1, g2) < 1e-8) break;
        double tab = trigamma(a + b);
        // negative Hessian is positive definite
        double h11 = trigamma(a) - tab, h22 = trigamma(b) - tab, h12 = -tab;
        double det = h11 * h22 - h12 * h12;
        double da = (h22 * g1 - h12 * g2) / det;
        double db = (h11 * g2 - h12 * g1) / det;
        double f0 = objective(a, b);
        double step = 1.0;
        while (step > 1e-12) {
            double na = a + step * da, nb = b + step * db;
            if (na > 0.0 && nb > 0.0 && objective(na, nb) >= f0 - 1e-14 * std::fabs(f0)) {
                a = na;
                b = nb;
                break;
            }
            step *= 0.5;
        }
        if (step <= 1e-12) break;
    }
    return {a, b};
}

}  // namespace

BetaParams beta_mle(const std::vector<double>& sample, const std::vector<double>& weights, double lo, double hi) {
    if (!weights.empty() && weights.size() != sample.size()) throw Error("weights and sample differ in length");
    if (sample.size() < 10) throw Error("beta_mle needs at least 10 values");
    double w_sum = 0.0, s1 = 0.0, s2 = 0.0, mean = 0.0;
    double vmin = hi, vmax = lo;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double x = std::clamp(sample[i], lo, hi);
        double w = weights.empty() ? 1.0 : weights[i];
        vmin = std::min(vmin, x);
        vmax = std::max(vmax, x);
        w_sum += w;
        s1 += w * std::log(x);
        s2 += w * std::log1p(-x);
        mean += w * x;
    }
    if (!(vmax > vmin)) throw Error("degenerate sample");
    if (!(w_sum > 0.0)) throw Error("beta_mle weights sum to zero");
    s1 /= w_sum;
    s2 /= w_sum;
    mean /= w_sum;
    double var = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double x = std::clamp(sample[i], lo, hi);
        double w = weights.empty() ? 1.0 : weights[i];
        var += w * (x - mean) * (x - mean);
    }
    var /= w_sum;
    return beta_newton(s1, s2, moments(mean, var));
}

MixtureFit mixture_fit(std::vector<double> sample) {
    if (sample.size() < 10) throw Error("mixture fit needs at least 10 values");
    // sorting makes every sum below independent of the input order
    std::sort(sample.begin(), sample.end());
    auto N = static_cast<double>(sample.size());
    std::vector<double> x(sample.size()), lx(sample.size()), l1x(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        x[i] = std::clamp(sample[i], 0.001, 0.999);
        lx[i] = std::log(x[i]);
        l1x[i] = std::log1p(-x[i]);
    }
    if (x.front() == x.back()) throw Error("degenerate sample");

    std::vector<double> upper(x.begin() + x.size() / 2, x.end());
    double um = std::accumulate(upper.begin(), upper.end(), 0.0) / upper.size();
    double uv = 0.0;
    for (double v : upper) uv += (v - um) * (v - um);
    uv /= upper.size();

    MixtureFit fit;
    fit.theta1 = 0.5;
    fit.outlier = moments(um, uv);
    double lo_theta = 1.0 / N, hi_theta = 1.0 - 1.0 / N;

    std::vector<double> resp(x.size());
    auto loglik = [&](double theta, const BetaParams& p) {
        double lb = log_beta(p.a, p.b), ll = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double f = std::exp((p.a - 1.0) * lx[i] + (p.b - 1.0) * l1x[i] - lb);
            ll += std::log((1.0 - theta) + theta * f);
        }
        return ll;
    };

    double ll = loglik(fit.theta1, fit.outlier);
    std::vector<double> trace{ll};
    auto breakdown = [&trace]() {
        std::ostringstream os;
        os << "mixture fit did not converge; last log-likelihoods:";
        for (std::size_t i = trace.size() > 5 ? trace.size() - 5 : 0; i < trace.size(); ++i) os << ' ' << trace[i];
        return Error(os.str());
    };
    for (int it = 1; it <= 500; ++it) {
        double lb = log_beta(fit.outlier.a, fit.outlier.b);
        double r_sum = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double f = std::exp((fit.outlier.a - 1.0) * lx[i] + (fit.outlier.b - 1.0) * l1x[i] - lb);
            double num = fit.theta1 * f;
            resp[i] = num / ((1.0 - fit.theta1) + num);
            r_sum += resp[i];
            s1 += resp[i] * lx[i];
            s2 += resp[i] * l1x[i];
        }
        fit.theta1 = std::clamp(r_sum / N, lo_theta, hi_theta);
        if (r_sum > 1e-12) fit.outlier = beta_newton(s1 / r_sum, s2 / r_sum, fit.outlier);
        double next = loglik(fit.theta1, fit.outlier);
        trace.push_back(next);
        double gain = next - ll;
        ll = next;
        fit.iterations = it;
        // EM never lowers the likelihood, so a drop beyond rounding means the M-step broke down; a Beta
        // component collapsing onto a point makes the likelihood unbounded
        if (!std::isfinite(next) || gain < -1e-6 * N || !(fit.outlier.a + fit.outlier.b < 1e6)) throw breakdown();
        if (std::fabs(gain) < 1e-8 * N) break;
    }
    fit.loglik = ll;
    // the uniform-only model has log-likelihood 0; without a clear gain over it theta is not identified
    if (2.0 * ll < chisq_upper_quantile(0.05, 3)) fit.theta1 = lo_theta;
    return fit;
}

std::vector<double> pava_increasing(const std::vector<double>& y) {
    std::vector<double> level;
    std::vector<int> width;
    for (double v : y) {
        level.push_back(v);
        width.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            double w1 = width[width.size() - 2], w2 = width.back();
            double merged = (level[level.size() - 2] * w1 + level.back() * w2) / (w1 + w2);
            level.pop_back();
            width.pop_back();
            level.back() = merged;
            width.back() += static_cast<int>(w2);
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], level[b]);
    return out;
}

MonotoneDensity monotonize_density(const BetaParams& beta, int grid_size) {
    if (!(beta.a > 0.0) || !(beta.b > 0.0)) throw Error("invalid Beta parameters");
    std::vector<double> f(grid_size);
    for (int c = 0; c < grid_size; ++c) f[c] = beta_pdf((c + 0.5) / grid_size, beta.a, beta.b);

    auto inc = pava_increasing(f);
    std::vector<double> rev(f.rbegin(), f.rend());
    auto dec = pava_increasing(rev);
    std::reverse(dec.begin(), dec.end());

    MonotoneDensity out;
    for (int c = 0; c < grid_size; ++c) {
        out.rss_increasing += (f[c] - inc[c]) * (f[c] - inc[c]);
        out.rss_decreasing += (f[c] - dec[c]) * (f[c] - dec[c]);
    }
    double tol = 1e-12 * std::max(1.0, std::max(out.rss_increasing, out.rss_decreasing));
    bool use_dec = out.rss_decreasing < out.rss_increasing - tol;
    out.direction = use_dec ? Direction::decreasing : Direction::increasing;
    out.values = use_dec ? dec : inc;
    double mass = std::accumulate(out.values.begin(), out.values.end(), 0.0) / grid_size;
    if (!(mass > 0.0) || !std::isfinite(mass)) throw Error("outlier density vanishes on the grid");
    for (auto& v : out.values) v /= mass;
    return out;
}

OutlierDistribution estimate_g_hat(const ScoreSet& s, std::uint64_t seed) {
    validate(s);
    OutlierDistribution out;
    out.split = dilution_split(s, seed);

    double lo = std::min(s.calibration.minCoeff(), s.test.minCoeff());
    double hi = std::max(s.calibration.maxCoeff(), s.test.maxCoeff());
    auto scale = [&](double v) { return v; };
    std::function<double(double)> to_unit = scale;
    if (lo < 0.0 || hi > 1.0) {
        double range = hi - lo;
        if (!(range > 0.0)) throw Error("degenerate sample");
        out.rescaled = true;
        out.rescale_lo = lo - 1e-6 * range;
        out.rescale_hi = hi + 1e-6 * range;
        to_unit = [&out](double v) { return (v - out.rescale_lo) / (out.rescale_hi - out.rescale_lo); };
    }

    std::vector<double> ref;
    for (int i : out.split.reference_half) ref.push_back(to_unit(s.calibration[i]));
    out.inlier_beta = beta_mle(ref);

    std::vector<double> diluted;
    for (int i : out.split.remaining_calibration) diluted.push_back(to_unit(s.calibration[i]));
    for (int j = 0; j < s.n(); ++j) diluted.push_back(to_unit(s.test[j]));
    for (auto& v : diluted) v = beta_cdf(v, out.inlier_beta.a, out.inlier_beta.b);

    auto fit = mixture_fit(std::move(diluted));
    out.theta1_hat = fit.theta1;
    out.outlier_beta = fit.outlier;
    auto mono = monotonize_density(fit.outlier);
    out.monotone_density = std::move(mono.values);
    out.direction = mono.direction;
    return out;
}

double diluted_outlier_fraction(double theta, int n, int m, int m1) { return theta * n / (n + m - m1); }

}  // namespace cct
