#include "cct/special.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>

namespace cct {

namespace {
const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
}

double normal_cdf(double x) { return boost::math::cdf(std_normal, x); }

double normal_sf(double x) { return boost::math::cdf(boost::math::complement(std_normal, x)); }

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(std_normal, p);
}

double chisq_upper_quantile(double p, double df) {
    boost::math::chi_squared_distribution<double> d(df);
    return boost::math::quantile(boost::math::complement(d, p));
}

double chisq_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    boost::math::chi_squared_distribution<double> d(df);
    return boost::math::cdf(boost::math::complement(d, x));
}

double beta_pdf(double x, double a, double b) {
    if (x < 0.0 || x > 1.0) return 0.0;
    boost::math::beta_distribution<double> d(a, b);
    return boost::math::pdf(d, x);
}

double beta_cdf(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    boost::math::beta_distribution<double> d(a, b);
    return boost::math::cdf(d, x);
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double digamma(double x) { return boost::math::digamma(x); }

double trigamma(double x) { return boost::math::trigamma(x); }

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace cct
