#pragma once

#include <Eigen/Dense>
#include <functional>

namespace tramicp {

// Objective with gradient: returns f(x) and, when grad is non-null, fills the
// gradient. May return +inf outside the implicit domain; the line search
// backtracks out of such regions.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)>;

struct OptimOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;   // sup-norm
    double f_relative_tolerance = 1e-10;
    double initial_step = 1.0;
};

struct OptimResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;       // gradient tolerance reached
    bool line_search_failed = false;
};

OptimResult bfgs_minimize(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                          const OptimOptions& options = {});

// Central-difference gradient, for objectives without an analytic one and as
// a check of analytic gradients in tests.
Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-6);

}  // namespace tramicp
