#include "psp/normal.hpp"

#include <cmath>
#include <limits>

namespace psp {

namespace {

// W. J. Cody's rational Chebyshev approximations for erf/erfc
// (Math. Comp. 23, 1969); standard IEEE double constants.
constexpr double kA[5] = {3.1611237438705656, 113.864154151050156, 377.485237685302021,
                          3209.37758913846947, 0.185777706184603153};
constexpr double kB[4] = {23.6012909523441209, 244.024637934444173, 1282.61652607737228,
                          2844.23683343917062};
constexpr double kC[9] = {0.564188496988670089, 8.88314979438837594, 66.1191906371416295,
                          298.635138197400131, 881.95222124176909, 1712.04761263407058,
                          2051.07837782607147, 1230.33935479799725, 2.15311535474403846e-8};
constexpr double kD[8] = {15.7449261107098347, 117.693950891312499, 537.181101862009858,
                          1621.38957456669019, 3290.79923573345963, 4362.61909014324716,
                          3439.36767414372164, 1230.33935480374942};
constexpr double kP[6] = {0.305326634961232344, 0.360344899949804439, 0.125781726111229246,
                          0.0160837851487422766, 6.58749161529837803e-4, 0.0163153871373020978};
constexpr double kQ[5] = {2.56852019228982242, 1.87295284992346047, 0.527905102951428412,
                          0.0605183413124413191, 0.00233520497626869185};

constexpr double kSqrtPiInv = 0.56418958354775628695;
constexpr double kThresh = 0.46875;
constexpr double kXBig = 26.543;
constexpr double kXSmall = 1.11e-16;

// erf on |x| <= 0.46875
double erf_small(double x) {
    double y = std::fabs(x);
    double ysq = y > kXSmall ? y * y : 0.0;
    double xnum = kA[4] * ysq;
    double xden = ysq;
    for (int i = 0; i < 3; i++) {
        xnum = (xnum + kA[i]) * ysq;
        xden = (xden + kB[i]) * ysq;
    }
    return x * (xnum + kA[3]) / (xden + kB[3]);
}

// erfc on 0.46875 <= y <= 4
double erfc_mid(double y) {
    double xnum = kC[8] * y;
    double xden = y;
    for (int i = 0; i < 7; i++) {
        xnum = (xnum + kC[i]) * y;
        xden = (xden + kD[i]) * y;
    }
    double result = (xnum + kC[7]) / (xden + kD[7]);
    double ysq = std::trunc(y * 16.0) / 16.0;
    double del = (y - ysq) * (y + ysq);
    return std::exp(-ysq * ysq) * std::exp(-del) * result;
}

// erfc for y > 4
double erfc_far(double y) {
    if (y >= kXBig) return 0.0;
    double ysq = 1.0 / (y * y);
    double xnum = kP[5] * ysq;
    double xden = ysq;
    for (int i = 0; i < 4; i++) {
        xnum = (xnum + kP[i]) * ysq;
        xden = (xden + kQ[i]) * ysq;
    }
    double result = ysq * (xnum + kP[4]) / (xden + kQ[4]);
    result = (kSqrtPiInv - result) / y;
    double trunc_y = std::trunc(y * 16.0) / 16.0;
    double del = (y - trunc_y) * (y + trunc_y);
    return std::exp(-trunc_y * trunc_y) * std::exp(-del) * result;
}

} // namespace

double erfc_approx(double x) {
    double y = std::fabs(x);
    double result;
    if (y <= kThresh) {
        result = 1.0 - erf_small(x);
        return result;
    }
    result = y <= 4.0 ? erfc_mid(y) : erfc_far(y);
    if (x < 0.0) result = 2.0 - result;
    return result;
}

double erf_approx(double x) {
    double y = std::fabs(x);
    if (y <= kThresh) return erf_small(x);
    double result = 1.0 - (y <= 4.0 ? erfc_mid(y) : erfc_far(y));
    return x < 0.0 ? -result : result;
}

double normal_cdf(double z) {
    double p = 0.5 * erfc_approx(-z * 0.70710678118654752440);
    if (p < 0.0) return 0.0;
    if (p > 1.0) return 1.0;
    return p;
}

double normal_sf(double z) { return normal_cdf(-z); }

double normal_pdf(double z) {
    return 0.39894228040143267794 * std::exp(-0.5 * z * z);
}

double gauss_tail_above(double mean, double var, double t) {
    if (var <= 0.0) return mean > t ? 1.0 : (mean < t ? 0.0 : 0.5);
    return normal_sf((t - mean) / std::sqrt(var));
}

double gauss_tail_below(double mean, double var, double t) {
    if (var <= 0.0) return mean < t ? 1.0 : (mean > t ? 0.0 : 0.5);
    return normal_cdf((t - mean) / std::sqrt(var));
}

namespace {

// Acklam's rational starting guess for the probit function.
double quantile_guess(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

} // namespace

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    double x = quantile_guess(p);
    // two Halley steps against the high-precision CDF
    for (int iter = 0; iter < 2; iter++) {
        double err = normal_cdf(x) - p;
        double pdf = normal_pdf(x);
        if (pdf <= 0.0) break;
        double u = err / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

} // namespace psp
