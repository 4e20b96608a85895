#pragma once

#include <Eigen/Dense>

namespace tramicp {

// Baseline-transformation bases a(.) with their monotonicity constraints and
// an unconstrained reparameterization used by the optimizer.
enum class BasisKind {
    linear,      // a(y) = (1, y),            theta_2 > 0
    log_linear,  // a(y) = (1, log y),        theta_2 > 0
    bernstein,   // order M on [L, U],        theta_1 <= ... <= theta_{M+1} (strict here)
    discrete,    // one-hot over K levels,    theta_1 < ... < theta_{K-1}, theta_K = +inf
};

struct Basis {
    BasisKind kind = BasisKind::linear;
    int order = 0;                // Bernstein order M
    double lower = 0.0;           // Bernstein support [lower, upper]
    double upper = 1.0;
    Eigen::VectorXd levels;       // discrete levels, strictly increasing

    // Length of a(y): 2, 2, M+1, K.
    int dimension() const;
    // Number of unconstrained parameters feeding constrain(): dimension(),
    // except discrete where the top coefficient is pinned at +inf.
    int free_parameters() const;
};

Basis linear_basis();
Basis log_linear_basis();
Basis bernstein_basis(int order, double lower, double upper);
Basis discrete_basis(Eigen::VectorXd levels);

// Default Bernstein support: observed range widened by 10% on each side.
Basis bernstein_basis_for_range(int order, double y_min, double y_max);

struct BaselineParams {
    Eigen::VectorXd theta;  // length dimension(); +inf in the last slot for discrete
    Eigen::VectorXd raw;    // length free_parameters()
};

// a(y); y must lie in the support (Bernstein: [L,U], log-linear: y > 0,
// discrete: one of the levels). Discrete returns the one-hot indicator.
Eigen::VectorXd evaluate(const Basis& basis, double y);

// a'(y) for the continuous kinds; discrete has no density and throws.
Eigen::VectorXd evaluate_derivative(const Basis& basis, double y);

// Unconstrained -> constrained coefficients:
//   linear/log-linear: (raw_1, exp(raw_2))
//   bernstein:         theta_1 = raw_1, theta_j = theta_{j-1} + exp(raw_j)
//   discrete:          cumulative as bernstein over the K-1 finite cutpoints,
//                      theta_K = +inf
BaselineParams constrain(const Basis& basis, const Eigen::VectorXd& raw);

// Inverse of constrain() on its image (finite coefficients only).
Eigen::VectorXd unconstrain(const Basis& basis, const Eigen::VectorXd& theta);

// Jacobian d(theta_finite)/d(raw) at the given raw vector.
Eigen::MatrixXd constrain_jacobian(const Basis& basis, const Eigen::VectorXd& raw);

// Index of the discrete level matching y (tolerance 1e-8), or -1.
int discrete_level_index(const Basis& basis, double y);

}  // namespace tramicp
