#include "tramicp/optim.hpp"

#include <cmath>
#include <limits>

namespace tramicp {

namespace {
constexpr double armijo_c1 = 1e-4;

bool finite(double v) { return std::isfinite(v); }
}  // namespace

OptimResult bfgs_minimize(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                          const OptimOptions& options) {
    const int dim = static_cast<int>(x0.size());
    OptimResult result;
    result.x = x0;
    result.gradient.resize(dim);

    if (dim == 0) {
        result.f = objective(result.x, nullptr);
        result.converged = true;
        return result;
    }

    double f = objective(result.x, &result.gradient);
    if (!finite(f)) {
        // infeasible start: shrink toward zero, which is feasible for every
        // reparameterized likelihood in this project
        for (int k = 0; k < 60 && !finite(f); ++k) {
            result.x *= 0.5;
            f = objective(result.x, &result.gradient);
        }
        if (!finite(f)) {
            result.f = f;
            result.line_search_failed = true;
            return result;
        }
    }

    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd grad = result.gradient;
    Eigen::VectorXd x = result.x;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd direction = -(inv_hessian * grad);
        double slope = grad.dot(direction);
        if (!(slope < 0.0)) {  // not a descent direction: reset to steepest descent
            inv_hessian.setIdentity();
            direction = -grad;
            slope = grad.dot(direction);
        }

        // backtracking Armijo line search
        double step = options.initial_step;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * direction;
            f_new = objective(x_new, nullptr);
            if (finite(f_new) && f_new <= f + armijo_c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.line_search_failed = true;
            break;
        }

        Eigen::VectorXd grad_new(dim);
        objective(x_new, &grad_new);

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = inv_hessian * y;
            // inverse BFGS update: H <- (I - rho s y')H(I - rho y s') + rho s s'
            inv_hessian.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
            inv_hessian.noalias() += (rho * rho * y.dot(hy) + rho) * (s * s.transpose());
        }

        const double f_change = std::abs(f - f_new);
        x = x_new;
        grad = grad_new;
        const double f_old = f;
        f = f_new;
        if (f_change <= options.f_relative_tolerance * (std::abs(f_old) + 1e-12)) {
            result.iterations = iter + 1;
            break;
        }
    }

    result.x = x;
    result.f = f;
    result.gradient = grad;
    if (!result.converged && grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance)
        result.converged = true;
    return result;
}

Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd probe = x;
    for (int j = 0; j < x.size(); ++j) {
        const double h = step * std::max(1.0, std::abs(x[j]));
        probe[j] = x[j] + h;
        const double fp = f(probe);
        probe[j] = x[j] - h;
        const double fm = f(probe);
        probe[j] = x[j];
        grad[j] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace tramicp
