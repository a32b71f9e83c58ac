#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cct {

// Density g of G(F) on [0,1], the outlier score law on the uniform scale.
struct GDescriptor {
    enum class Kind { lehmann, beta, piecewise_constant };
    Kind kind = Kind::lehmann;
    int k = 2;
    double a = 1.0, b = 1.0;
    std::vector<double> values;  // uniform grid cells on [0,1]

    static GDescriptor lehmann(int k);
    static GDescriptor beta(double a, double b);
    static GDescriptor piecewise(std::vector<double> values);

    double density(double u) const;
    GDescriptor reflected() const;  // u -> g(1 - u)
    std::string id() const;
};

enum class Direction { increasing, decreasing };

const char* to_string(Direction d);

// a(l, r) = E[g(U^(r)_{m+l})], r = 1..m+l, rows computed on first use.
class ShiraishiTable {
public:
    ShiraishiTable(GDescriptor g, int m, int n_max, Direction direction = Direction::increasing,
                   int mc_samples = 100000, std::uint64_t seed = 0);

    const GDescriptor& g() const { return g_; }
    Direction direction() const { return direction_; }
    int m() const { return m_; }
    int n_max() const { return n_max_; }

    // entry r - 1 holds a(l, r)
    const std::vector<double>& row(int l) const;
    double a(int l, int r) const { return row(l)[r - 1]; }
    double mean(int l) const;
    double sd(int l) const;
    double critical_value(int l, double alpha) const;
    bool row_monotone(int l) const;

    // Table of the reflected density, used with negated scores.
    std::shared_ptr<ShiraishiTable> reflected() const;

    void write_csv(const std::string& path, int l) const;

private:
    struct Row {
        std::vector<double> a;
        double mu = 0.0;
        double sigma = 0.0;
        bool monotone = true;
    };
    const Row& get(int l) const;
    Row compute(int l) const;

    GDescriptor g_;
    int m_;
    int n_max_;
    Direction direction_;
    int mc_samples_;
    std::uint64_t seed_;
    mutable std::mutex mutex_;
    mutable std::vector<std::unique_ptr<Row>> rows_;
};

// Monte Carlo estimate of E[g(U^(r)_N)] for r = 1..N from sorted uniform samples.
std::vector<double> mc_score_row(const GDescriptor& g, int N, int samples, std::uint64_t seed);

// Piecewise-constant row through binomial tails: P(U^(r)_N <= t) = P(Bin(N, t) >= r).
std::vector<double> piecewise_score_row(const std::vector<double>& values, int N);

}  // namespace cct
