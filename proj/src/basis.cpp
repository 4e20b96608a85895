#include "tramicp/basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tramicp {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();

Eigen::VectorXd bernstein_row(int order, double s) {
    // binomial expansion of (s + (1-s))^M, evaluated term by term
    Eigen::VectorXd a(order + 1);
    double coef = 1.0;
    for (int j = 0; j <= order; ++j) {
        if (j > 0) coef = coef * (order - j + 1) / j;
        a[j] = coef * std::pow(s, j) * std::pow(1.0 - s, order - j);
    }
    return a;
}
}  // namespace

int Basis::dimension() const {
    switch (kind) {
        case BasisKind::linear:
        case BasisKind::log_linear: return 2;
        case BasisKind::bernstein: return order + 1;
        case BasisKind::discrete: return static_cast<int>(levels.size());
    }
    return 0;
}

int Basis::free_parameters() const {
    return kind == BasisKind::discrete ? dimension() - 1 : dimension();
}

Basis linear_basis() { return Basis{BasisKind::linear}; }

Basis log_linear_basis() { return Basis{BasisKind::log_linear}; }

Basis bernstein_basis(int order, double lower, double upper) {
    if (order < 1) throw std::invalid_argument("bernstein_basis: order must be >= 1");
    if (!(lower < upper)) throw std::invalid_argument("bernstein_basis: require lower < upper");
    Basis b;
    b.kind = BasisKind::bernstein;
    b.order = order;
    b.lower = lower;
    b.upper = upper;
    return b;
}

Basis bernstein_basis_for_range(int order, double y_min, double y_max) {
    double range = y_max - y_min;
    if (!(range > 0.0)) range = std::max(1.0, std::abs(y_min));
    return bernstein_basis(order, y_min - 0.1 * range, y_max + 0.1 * range);
}

Basis discrete_basis(Eigen::VectorXd levels) {
    if (levels.size() < 2) throw std::invalid_argument("discrete_basis: need at least 2 levels");
    for (int k = 1; k < levels.size(); ++k)
        if (!(levels[k] > levels[k - 1]))
            throw std::invalid_argument("discrete_basis: levels must be strictly increasing");
    Basis b;
    b.kind = BasisKind::discrete;
    b.levels = std::move(levels);
    return b;
}

int discrete_level_index(const Basis& basis, double y) {
    for (int k = 0; k < basis.levels.size(); ++k)
        if (std::abs(y - basis.levels[k]) <= 1e-8 * std::max(1.0, std::abs(basis.levels[k])))
            return k;
    return -1;
}

Eigen::VectorXd evaluate(const Basis& basis, double y) {
    switch (basis.kind) {
        case BasisKind::linear: {
            Eigen::VectorXd a(2);
            a << 1.0, y;
            return a;
        }
        case BasisKind::log_linear: {
            if (!(y > 0.0)) throw std::domain_error("log-linear basis requires y > 0");
            Eigen::VectorXd a(2);
            a << 1.0, std::log(y);
            return a;
        }
        case BasisKind::bernstein: {
            if (y < basis.lower || y > basis.upper)
                throw std::domain_error("bernstein basis: y outside [L, U]");
            const double s = (y - basis.lower) / (basis.upper - basis.lower);
            return bernstein_row(basis.order, s);
        }
        case BasisKind::discrete: {
            const int k = discrete_level_index(basis, y);
            if (k < 0) throw std::domain_error("discrete basis: y is not a level");
            Eigen::VectorXd a = Eigen::VectorXd::Zero(basis.levels.size());
            a[k] = 1.0;
            return a;
        }
    }
    throw std::logic_error("evaluate: unknown basis kind");
}

Eigen::VectorXd evaluate_derivative(const Basis& basis, double y) {
    switch (basis.kind) {
        case BasisKind::linear: {
            Eigen::VectorXd a(2);
            a << 0.0, 1.0;
            return a;
        }
        case BasisKind::log_linear: {
            if (!(y > 0.0)) throw std::domain_error("log-linear basis requires y > 0");
            Eigen::VectorXd a(2);
            a << 0.0, 1.0 / y;
            return a;
        }
        case BasisKind::bernstein: {
            if (y < basis.lower || y > basis.upper)
                throw std::domain_error("bernstein basis: y outside [L, U]");
            // a'_{j,M} = M/(U-L) * (b_{j-1,M-1} - b_{j,M-1})
            const double s = (y - basis.lower) / (basis.upper - basis.lower);
            const double scale = basis.order / (basis.upper - basis.lower);
            const Eigen::VectorXd lower_order = bernstein_row(basis.order - 1, s);
            Eigen::VectorXd a(basis.order + 1);
            for (int j = 0; j <= basis.order; ++j) {
                const double left = (j >= 1) ? lower_order[j - 1] : 0.0;
                const double right = (j <= basis.order - 1) ? lower_order[j] : 0.0;
                a[j] = scale * (left - right);
            }
            return a;
        }
        case BasisKind::discrete:
            throw std::logic_error("evaluate_derivative: unsupported for discrete basis");
    }
    throw std::logic_error("evaluate_derivative: unknown basis kind");
}

BaselineParams constrain(const Basis& basis, const Eigen::VectorXd& raw) {
    const int n_free = basis.free_parameters();
    if (raw.size() != n_free)
        throw std::invalid_argument("constrain: raw parameter vector has wrong length");
    BaselineParams out;
    out.raw = raw;
    out.theta.resize(basis.dimension());
    switch (basis.kind) {
        case BasisKind::linear:
        case BasisKind::log_linear:
            out.theta[0] = raw[0];
            out.theta[1] = std::exp(raw[1]);
            break;
        case BasisKind::bernstein:
        case BasisKind::discrete:
            out.theta[0] = raw[0];
            for (int j = 1; j < n_free; ++j) out.theta[j] = out.theta[j - 1] + std::exp(raw[j]);
            if (basis.kind == BasisKind::discrete) out.theta[basis.dimension() - 1] = inf;
            break;
    }
    return out;
}

Eigen::VectorXd unconstrain(const Basis& basis, const Eigen::VectorXd& theta) {
    const int n_free = basis.free_parameters();
    if (theta.size() != basis.dimension() && theta.size() != n_free)
        throw std::invalid_argument("unconstrain: theta has wrong length");
    Eigen::VectorXd raw(n_free);
    switch (basis.kind) {
        case BasisKind::linear:
        case BasisKind::log_linear:
            if (!(theta[1] > 0.0)) throw std::domain_error("unconstrain: theta_2 must be > 0");
            raw[0] = theta[0];
            raw[1] = std::log(theta[1]);
            break;
        case BasisKind::bernstein:
        case BasisKind::discrete:
            raw[0] = theta[0];
            for (int j = 1; j < n_free; ++j) {
                const double gap = theta[j] - theta[j - 1];
                if (!(gap > 0.0)) throw std::domain_error("unconstrain: theta not strictly increasing");
                raw[j] = std::log(gap);
            }
            break;
    }
    return raw;
}

Eigen::MatrixXd constrain_jacobian(const Basis& basis, const Eigen::VectorXd& raw) {
    const int n_free = basis.free_parameters();
    if (raw.size() != n_free)
        throw std::invalid_argument("constrain_jacobian: raw parameter vector has wrong length");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_free, n_free);
    switch (basis.kind) {
        case BasisKind::linear:
        case BasisKind::log_linear:
            jac(0, 0) = 1.0;
            jac(1, 1) = std::exp(raw[1]);
            break;
        case BasisKind::bernstein:
        case BasisKind::discrete:
            // theta_j depends on raw_0 and every increment raw_k with k <= j
            for (int j = 0; j < n_free; ++j) {
                jac(j, 0) = 1.0;
                for (int k = 1; k <= j; ++k) jac(j, k) = std::exp(raw[k]);
            }
            break;
    }
    return jac;
}

}  // namespace tramicp
