#include "tramicp/errdist.hpp"

namespace tramicp {
namespace detail {

// Rational approximation of the standard normal quantile (initial guess),
// then a Newton/bisection hybrid on cdf to tolerance 1e-12.
static double normal_quantile_guess(double p) {
    // Acklam-style rational approximation, absolute error ~1e-9
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    double z = normal_quantile_guess(p);
    for (int iter = 0; iter < 60; ++iter) {
        const double f = cdf(ErrorDistribution::std_normal, z) - p;
        if (f > 0.0)
            hi = z;
        else
            lo = z;
        const double dens = density(ErrorDistribution::std_normal, z);
        double step = (dens > 0.0) ? f / dens : 0.0;
        double z_next = z - step;
        if (!(z_next > lo && z_next < hi)) z_next = 0.5 * (lo + hi);  // bisection fallback
        if (std::abs(z_next - z) <= 1e-12 * std::max(1.0, std::abs(z_next))) return z_next;
        z = z_next;
    }
    return z;
}

}  // namespace detail

ErrorDistribution error_distribution_from_token(std::string_view token) {
    if (token == "normal") return ErrorDistribution::std_normal;
    if (token == "logistic") return ErrorDistribution::std_logistic;
    if (token == "minev") return ErrorDistribution::min_extreme_value;
    if (token == "maxev") return ErrorDistribution::max_extreme_value;
    throw std::invalid_argument("unknown error distribution token: " + std::string(token));
}

std::string_view error_distribution_token(ErrorDistribution d) {
    switch (d) {
        case ErrorDistribution::std_normal: return "normal";
        case ErrorDistribution::std_logistic: return "logistic";
        case ErrorDistribution::min_extreme_value: return "minev";
        case ErrorDistribution::max_extreme_value: return "maxev";
    }
    return "";
}

}  // namespace tramicp
