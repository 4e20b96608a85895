#pragma once

namespace tramicp {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x),
// series/continued-fraction evaluation, absolute error below 1e-12 for the
// argument ranges used here.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace tramicp
