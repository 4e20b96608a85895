#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tramicp {

// Error distributions on the extended real line. All four have strictly
// increasing CDFs with log-concave densities; cdf(-inf) = 0 and
// cdf(+inf) = 1 by convention, and the density is taken to be 0 at +-inf
// wherever a likelihood difference F(hi) - F(lo) needs it.
enum class ErrorDistribution {
    std_normal,
    std_logistic,
    min_extreme_value,
    max_extreme_value,
};

namespace detail {

inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr double neg_half_log_two_pi = -0.91893853320467274178;
inline constexpr double inv_sqrt2 = 0.70710678118654752440;

inline void check_finite_arg(double z, const char* what) {
    if (std::isnan(z)) throw std::domain_error(std::string(what) + ": NaN argument");
}

}  // namespace detail

// F_Z(z), exact 0/1 at -inf/+inf.
inline double cdf(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "cdf");
    if (z == -detail::inf) return 0.0;
    if (z == detail::inf) return 1.0;
    switch (d) {
        case ErrorDistribution::std_normal:
            return 0.5 * std::erfc(-z * detail::inv_sqrt2);
        case ErrorDistribution::std_logistic:
            return 1.0 / (1.0 + std::exp(-z));
        case ErrorDistribution::min_extreme_value:
            return -std::expm1(-std::exp(z));
        case ErrorDistribution::max_extreme_value:
            return std::exp(-std::exp(-z));
    }
    return 0.0;
}

// 1 - F_Z(z), computed without cancellation in the upper tail.
inline double survival(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "survival");
    if (z == -detail::inf) return 1.0;
    if (z == detail::inf) return 0.0;
    switch (d) {
        case ErrorDistribution::std_normal:
            return 0.5 * std::erfc(z * detail::inv_sqrt2);
        case ErrorDistribution::std_logistic:
            return 1.0 / (1.0 + std::exp(z));
        case ErrorDistribution::min_extreme_value:
            return std::exp(-std::exp(z));
        case ErrorDistribution::max_extreme_value:
            return -std::expm1(-std::exp(-z));
    }
    return 0.0;
}

// log f_Z(z); the argument must be finite (the density is undefined at the
// extended points).
inline double log_density(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "log_density");
    if (std::isinf(z)) throw std::domain_error("log_density: argument must be finite");
    switch (d) {
        case ErrorDistribution::std_normal:
            return detail::neg_half_log_two_pi - 0.5 * z * z;
        case ErrorDistribution::std_logistic: {
            // -z - 2 log(1 + e^{-z}), evaluated on the side that does not overflow
            const double a = -std::abs(z);
            return a - 2.0 * std::log1p(std::exp(a));
        }
        case ErrorDistribution::min_extreme_value:
            return z - std::exp(z);
        case ErrorDistribution::max_extreme_value:
            return -z - std::exp(-z);
    }
    return 0.0;
}

// f_Z(z); 0 at +-inf (likelihood convention).
inline double density(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "density");
    if (std::isinf(z)) return 0.0;
    return std::exp(log_density(d, z));
}

// d/dz log f_Z(z)
inline double log_density_derivative(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "log_density_derivative");
    if (std::isinf(z)) throw std::domain_error("log_density_derivative: argument must be finite");
    switch (d) {
        case ErrorDistribution::std_normal:
            return -z;
        case ErrorDistribution::std_logistic:
            return 1.0 - 2.0 * cdf(d, z);
        case ErrorDistribution::min_extreme_value:
            return 1.0 - std::exp(z);
        case ErrorDistribution::max_extreme_value:
            return -1.0 + std::exp(-z);
    }
    return 0.0;
}

// d^2/dz^2 log f_Z(z); strictly negative for all four kinds (log-concavity).
inline double log_density_second_derivative(ErrorDistribution d, double z) {
    detail::check_finite_arg(z, "log_density_second_derivative");
    if (std::isinf(z)) throw std::domain_error("log_density_second_derivative: argument must be finite");
    switch (d) {
        case ErrorDistribution::std_normal:
            return -1.0;
        case ErrorDistribution::std_logistic:
            return -2.0 * density(d, z);
        case ErrorDistribution::min_extreme_value:
            return -std::exp(z);
        case ErrorDistribution::max_extreme_value:
            return -std::exp(-z);
    }
    return 0.0;
}

namespace detail {
double normal_quantile(double p);
}

// F_Z^{-1}(p) for p in [0,1]; quantile(0) = -inf, quantile(1) = +inf.
inline double quantile(ErrorDistribution d, double p) {
    if (std::isnan(p) || p < 0.0 || p > 1.0)
        throw std::domain_error("quantile: probability outside [0, 1]");
    if (p == 0.0) return -detail::inf;
    if (p == 1.0) return detail::inf;
    switch (d) {
        case ErrorDistribution::std_normal:
            return detail::normal_quantile(p);
        case ErrorDistribution::std_logistic:
            return std::log(p) - std::log1p(-p);
        case ErrorDistribution::min_extreme_value:
            return std::log(-std::log1p(-p));
        case ErrorDistribution::max_extreme_value:
            return -std::log(-std::log(p));
    }
    return 0.0;
}

ErrorDistribution error_distribution_from_token(std::string_view token);
std::string_view error_distribution_token(ErrorDistribution d);

}  // namespace tramicp
