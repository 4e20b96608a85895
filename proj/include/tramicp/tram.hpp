#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string_view>

#include "tramicp/basis.hpp"
#include "tramicp/dataset.hpp"
#include "tramicp/errdist.hpp"
#include "tramicp/rng.hpp"

namespace tramicp {

// Model families and their (basis, error distribution) pairs:
//   lm       linear      normal        binary   discrete (K=2)  logistic
//   boxcox   bernstein   normal        polr     discrete        logistic
//   colr     bernstein   logistic      cotram   bernstein       logistic
//   coxph    bernstein   minev         weibull  log-linear      minev
enum class Family { lm, binary, boxcox, polr, colr, cotram, coxph, weibull };

enum class ResponseType { continuous, discrete, count };

Family family_from_token(std::string_view token);
std::string_view family_token(Family f);
ErrorDistribution family_error(Family f);
BasisKind family_basis_kind(Family f);
ResponseType family_response_type(Family f);

struct TramSpec {
    Family family = Family::lm;
    ErrorDistribution error = ErrorDistribution::std_normal;
    int bernstein_order = 6;

    static TramSpec make(Family f, int bernstein_order = 6);
};

// Linear shift transformation model with fitted coefficients. The
// transformation is h(y | x) = a(y)' theta - x' beta, and with environment
// interactions h(y | x, e) = a(y)' theta - x' beta - m(x, e)' gamma where
// m(x, e) = (1, x')' (x) e.
struct FittedTram {
    TramSpec spec;
    Basis basis;
    BaselineParams theta;
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;  // empty unless fitted with environment interactions
    int env_dim = 0;

    double loglik = 0.0;
    bool converged = false;
    double gradient_norm = 0.0;
    bool separation = false;  // |beta_j| > 50 in a binary fit
    int iterations = 0;
};

// m(x, e): environment main effects and first-order interactions,
// length q (1 + |x|).
Eigen::VectorXd environment_design(const Eigen::VectorXd& x, const Eigen::VectorXd& e);

// h(y | x[, e]); +inf at the top discrete level.
double transformation(const FittedTram& model, double y, const Eigen::VectorXd& x,
                      const Eigen::VectorXd* e = nullptr);

// Log-likelihood of one observation under the model, with the transformation
// shifted by `shift` (used by the finite-difference definition of the score
// residual). Exact continuous responses contribute log f_Z(h(y|x)) +
// log h'(y|x); everything else contributes the log of the interval
// probability F_Z(h(upper|x)) - F_Z(h(lower|x)).
double log_likelihood(const FittedTram& model, const Observation& obs, double shift = 0.0);

// d/dalpha log-likelihood(h + alpha) at alpha = 0; values beyond 1e12 in
// magnitude are clipped (degenerate cells) and reported through `clipped`.
double score_residual(const FittedTram& model, const Observation& obs, bool* clipped = nullptr);

// Generalized inverse y = inf{y in support : z <= h(y | x)}; extended z
// allowed. Models fitted with environment interactions are not invertible
// through this interface.
double inverse_transformation(const FittedTram& model, double z, const Eigen::VectorXd& x);

// One draw from the conditional distribution: z ~ F_Z through the inverse.
double sample(const FittedTram& model, const Eigen::VectorXd& x, Rng& rng);

struct FitOptions {
    bool include_env_interactions = false;
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;  // sup-norm of the mean-loglik gradient
};

// Maximum likelihood over the unconstrained reparameterization; deterministic
// given data. Non-convergence is reported through the flags, not thrown.
FittedTram fit(const TramSpec& spec, const Dataset& data, const FitOptions& options = {});

// Negative Hessian of the total log-likelihood in (theta, beta, gamma)
// coordinates at the fitted parameters.
Eigen::MatrixXd observed_information(const FittedTram& model, const Dataset& data);

// Total log-likelihood of the model on a dataset.
double total_log_likelihood(const FittedTram& model, const Dataset& data);

}  // namespace tramicp
