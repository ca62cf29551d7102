#pragma once

namespace psp {

// Rational-minimax complementary error function (Cody's coefficients);
// relative error well under 1e-12 across the range used here.
double erfc_approx(double x);
double erf_approx(double x);

// Standard normal CDF / survival / density.
double normal_cdf(double z);
double normal_sf(double z);
double normal_pdf(double z);

// Pr(X > t) (or >= t; equal in probability) for X ~ N(mean, var).
// var == 0 degenerates to a step; strictness then matters and is honored
// by the caller via normal_tail_upper/lower with the exact comparison.
double gauss_tail_above(double mean, double var, double t);
double gauss_tail_below(double mean, double var, double t);

// Inverse CDF (Acklam's approximation polished by Halley steps).
double normal_quantile(double p);

} // namespace psp
