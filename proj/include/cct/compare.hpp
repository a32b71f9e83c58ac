#pragma once

#include <algorithm>
#include <cmath>

namespace cct {

// Rational-valued statistics (Simes, Storey) are compared with a relative slack so that
// e.g. 3 * (1/30) / 1 <= 0.1 holds as it does in exact arithmetic.
inline double slack(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return 0.0;
    return 1e-10 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline bool approx_leq(double a, double b) { return a <= b + slack(a, b); }

inline bool approx_eq(double a, double b) { return a == b || std::fabs(a - b) <= slack(a, b); }

inline bool definitely_greater(double a, double b) { return a > b + slack(a, b); }

}  // namespace cct
