#pragma once

namespace cct {

double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

// df degrees of freedom, upper-tail probability p
double chisq_upper_quantile(double p, double df);
double chisq_sf(double x, double df);

double beta_pdf(double x, double a, double b);
double beta_cdf(double x, double a, double b);
double log_beta(double a, double b);
double digamma(double x);
double trigamma(double x);
double log_choose(double n, double k);

}  // namespace cct
