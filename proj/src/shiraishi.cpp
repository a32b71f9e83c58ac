#include "cct/shiraishi.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "cct/error.hpp"
#include "cct/special.hpp"
#include "csv.hpp"

namespace cct {

GDescriptor GDescriptor::lehmann(int k) {
    if (k < 1) throw Error("lehmann k must be >= 1");
    GDescriptor g;
    g.kind = Kind::lehmann;
    g.k = k;
    return g;
}

GDescriptor GDescriptor::beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw Error("invalid Beta parameters");
    GDescriptor g;
    g.kind = Kind::beta;
    g.a = a;
    g.b = b;
    return g;
}

GDescriptor GDescriptor::piecewise(std::vector<double> values) {
    if (values.empty()) throw Error("empty piecewise density");
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("piecewise density values must be finite and >= 0");
    GDescriptor g;
    g.kind = Kind::piecewise_constant;
    g.values = std::move(values);
    return g;
}

double GDescriptor::density(double u) const {
    switch (kind) {
        case Kind::lehmann: return k * std::pow(u, k - 1);
        case Kind::beta: return beta_pdf(u, a, b);
        case Kind::piecewise_constant: {
            auto G = static_cast<int>(values.size());
            int c = std::clamp(static_cast<int>(u * G), 0, G - 1);
            return values[c];
        }
    }
    return 0.0;
}

GDescriptor GDescriptor::reflected() const {
    switch (kind) {
        case Kind::beta: return beta(b, a);
        case Kind::piecewise_constant: return piecewise(std::vector<double>(values.rbegin(), values.rend()));
        case Kind::lehmann: break;
    }
    throw Error("reflection of a lehmann density is not supported");
}

std::string GDescriptor::id() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::lehmann: os << "lehmann:" << k; break;
        case Kind::beta: os << "beta:" << a << ":" << b; break;
        case Kind::piecewise_constant: os << "piecewise:" << values.size(); break;
    }
    return os.str();
}

const char* to_string(Direction d) { return d == Direction::increasing ? "increasing" : "decreasing"; }

std::vector<double> mc_score_row(const GDescriptor& g, int N, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> acc(N, 0.0), u(N);
    for (int s = 0; s < samples; ++s) {
        for (auto& x : u) x = unif(rng);
        std::sort(u.begin(), u.end());
        for (int r = 0; r < N; ++r) acc[r] += g.density(u[r]);
    }
    for (auto& x : acc) x /= samples;
    return acc;
}

std::vector<double> piecewise_score_row(const std::vector<double>& v, int N) {
    auto G = static_cast<int>(v.size());
    std::vector<double> row(N, v.back());
    std::vector<double> pmf(N + 1), prefix(N + 1, 0.0);
    for (int c = 1; c < G; ++c) {
        double jump = v[c - 1] - v[c];
        if (jump == 0.0) continue;
        double t = static_cast<double>(c) / G;
        double odds = t / (1.0 - t);
        // Bin(N, t) pmf from the mode outwards, dropping terms too small to move a double
        int mode = std::min(N, static_cast<int>(std::floor((N + 1) * t)));
        pmf[mode] = std::exp(log_choose(N, mode) + mode * std::log(t) + (N - mode) * std::log1p(-t));
        int lo = mode, hi = mode;
        while (lo > 0) {
            double next = pmf[lo] * lo / ((N - lo + 1) * odds);
            if (next < 1e-18 * pmf[mode]) break;
            pmf[--lo] = next;
        }
        while (hi < N) {
            double next = pmf[hi] * (N - hi) / (hi + 1) * odds;
            if (next < 1e-18 * pmf[mode]) break;
            pmf[++hi] = next;
        }
        // row[r - 1] gains jump * P(Bin(N, t) >= r); below the window that tail is constant
        double tail = 0.0;
        for (int r = hi; r >= std::max(lo, 1); --r) {
            tail += pmf[r];
            row[r - 1] += jump * std::min(1.0, tail);
        }
        if (lo > 1) {
            prefix[0] += jump * std::min(1.0, tail);
            prefix[lo - 1] -= jump * std::min(1.0, tail);
        }
    }
    double shift = 0.0;
    for (int r = 0; r < N; ++r) {
        shift += prefix[r];
        row[r] += shift;
    }
    return row;
}

ShiraishiTable::ShiraishiTable(GDescriptor g, int m, int n_max, Direction direction, int mc_samples,
                               std::uint64_t seed)
    : g_(std::move(g)), m_(m), n_max_(n_max), direction_(direction), mc_samples_(mc_samples), seed_(seed) {
    if (m < 1) throw Error("score table needs m >= 1");
    if (n_max < 1) throw Error("score table needs n_max >= 1");
    if (g_.kind == GDescriptor::Kind::beta) GDescriptor::beta(g_.a, g_.b);
    rows_.resize(n_max + 1);
}

ShiraishiTable::Row ShiraishiTable::compute(int l) const {
    int N = m_ + l;
    Row row;
    row.a.resize(N);
    switch (g_.kind) {
        case GDescriptor::Kind::lehmann:
            for (int r = 1; r <= N; ++r) {
                double v = g_.k;
                for (int i = 0; i <= g_.k - 2; ++i) v *= static_cast<double>(r + i) / (N + 1 + i);
                row.a[r - 1] = v;
            }
            break;
        case GDescriptor::Kind::beta: {
            bool closed = true;
            for (int r = 1; r <= N && closed; ++r) closed = r + g_.a - 1.0 > 0.0 && N - r + g_.b > 0.0;
            if (closed) {
                double lb = log_beta(g_.a, g_.b);
                for (int r = 1; r <= N; ++r)
                    row.a[r - 1] = std::exp(log_beta(r + g_.a - 1.0, N - r + g_.b) - lb - log_beta(r, N - r + 1.0));
            } else {
                row.a = mc_score_row(g_, N, mc_samples_, seed_ + static_cast<std::uint64_t>(l));
            }
            break;
        }
        case GDescriptor::Kind::piecewise_constant: row.a = piecewise_score_row(g_.values, N); break;
    }

    double sum = 0.0;
    for (double x : row.a) sum += x;
    row.mu = static_cast<double>(l) / N * sum;
    double ss = 0.0;
    for (double x : row.a) ss += (x - row.mu / l) * (x - row.mu / l);
    row.sigma = std::sqrt(static_cast<double>(m_) * l / (static_cast<double>(N) * (N - 1)) * ss);

    double scale = 0.0;
    for (double x : row.a) scale = std::max(scale, std::fabs(x));
    double tol = 1e-12 * std::max(1.0, scale);
    for (int r = 1; r < N; ++r) {
        double step = row.a[r] - row.a[r - 1];
        if (direction_ == Direction::increasing ? step < -tol : step > tol) {
            row.monotone = false;
            break;
        }
    }
    return row;
}

const ShiraishiTable::Row& ShiraishiTable::get(int l) const {
    if (l < 1 || l > n_max_)
        throw Error("score table covers l in [1," + std::to_string(n_max_) + "], requested " + std::to_string(l));
    std::lock_guard<std::mutex> lock(mutex_);
    if (!rows_[l]) rows_[l] = std::make_unique<Row>(compute(l));
    return *rows_[l];
}

const std::vector<double>& ShiraishiTable::row(int l) const { return get(l).a; }
double ShiraishiTable::mean(int l) const { return get(l).mu; }
double ShiraishiTable::sd(int l) const { return get(l).sigma; }
bool ShiraishiTable::row_monotone(int l) const { return get(l).monotone; }

double ShiraishiTable::critical_value(int l, double alpha) const {
    const Row& r = get(l);
    return r.mu + normal_quantile(1.0 - alpha) * r.sigma;
}

std::shared_ptr<ShiraishiTable> ShiraishiTable::reflected() const {
    Direction flipped = direction_ == Direction::increasing ? Direction::decreasing : Direction::increasing;
    return std::make_shared<ShiraishiTable>(g_.reflected(), m_, n_max_, flipped, mc_samples_, seed_);
}

void ShiraishiTable::write_csv(const std::string& path, int l) const {
    auto out = csv::open_out(path);
    out << "l,r,a\n" << std::setprecision(17);
    const auto& a = row(l);
    for (std::size_t r = 0; r < a.size(); ++r) out << l << ',' << r + 1 << ',' << a[r] << '\n';
}

}  // namespace cct
