#include "tramicp/tram.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "tramicp/optim.hpp"

namespace tramicp {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double residual_clip = 1e12;
}  // namespace

Family family_from_token(std::string_view token) {
    if (token == "lm") return Family::lm;
    if (token == "binary") return Family::binary;
    if (token == "boxcox") return Family::boxcox;
    if (token == "polr") return Family::polr;
    if (token == "colr") return Family::colr;
    if (token == "cotram") return Family::cotram;
    if (token == "coxph") return Family::coxph;
    if (token == "weibull") return Family::weibull;
    throw std::invalid_argument("unknown family token: " + std::string(token));
}

std::string_view family_token(Family f) {
    switch (f) {
        case Family::lm: return "lm";
        case Family::binary: return "binary";
        case Family::boxcox: return "boxcox";
        case Family::polr: return "polr";
        case Family::colr: return "colr";
        case Family::cotram: return "cotram";
        case Family::coxph: return "coxph";
        case Family::weibull: return "weibull";
    }
    return "";
}

ErrorDistribution family_error(Family f) {
    switch (f) {
        case Family::lm:
        case Family::boxcox: return ErrorDistribution::std_normal;
        case Family::binary:
        case Family::polr:
        case Family::colr:
        case Family::cotram: return ErrorDistribution::std_logistic;
        case Family::coxph:
        case Family::weibull: return ErrorDistribution::min_extreme_value;
    }
    return ErrorDistribution::std_normal;
}

BasisKind family_basis_kind(Family f) {
    switch (f) {
        case Family::lm: return BasisKind::linear;
        case Family::weibull: return BasisKind::log_linear;
        case Family::binary:
        case Family::polr: return BasisKind::discrete;
        default: return BasisKind::bernstein;
    }
}

ResponseType family_response_type(Family f) {
    switch (f) {
        case Family::binary:
        case Family::polr: return ResponseType::discrete;
        case Family::cotram: return ResponseType::count;
        default: return ResponseType::continuous;
    }
}

TramSpec TramSpec::make(Family f, int bernstein_order) {
    TramSpec spec;
    spec.family = f;
    spec.error = family_error(f);
    spec.bernstein_order = bernstein_order;
    return spec;
}

Eigen::VectorXd environment_design(const Eigen::VectorXd& x, const Eigen::VectorXd& e) {
    const Eigen::Index q = e.size();
    Eigen::VectorXd m(q * (1 + x.size()));
    m.head(q) = e;
    for (Eigen::Index j = 0; j < x.size(); ++j) m.segment(q * (j + 1), q) = x[j] * e;
    return m;
}

namespace {

// Evaluation points of one response under a realized basis: either an exact
// continuous point (basis row + derivative row), or an interval with
// possibly infinite endpoints (one-hot / basis rows on the finite sides).
struct EvalPoints {
    bool exact_continuous = false;
    Eigen::VectorXd point, deriv;              // exact continuous
    bool hi_infinite = false, lo_infinite = false;
    Eigen::VectorXd hi, lo;                    // interval sides, finite ones only
};

// Basis row over the finite theta coordinates (discrete drops the +inf slot).
Eigen::VectorXd finite_row(const Basis& basis, double y) {
    Eigen::VectorXd a = evaluate(basis, y);
    if (basis.kind == BasisKind::discrete) return a.head(basis.free_parameters());
    return a;
}

int checked_level(const Basis& basis, double y) {
    const int k = discrete_level_index(basis, y);
    if (k < 0) throw std::domain_error("response value is not a level of the fitted support");
    return k;
}

double require_integer(double y) {
    const double r = std::round(y);
    if (std::abs(y - r) > 1e-8 || r < 0.0)
        throw std::domain_error("count response must be a nonnegative integer");
    return r;
}

EvalPoints resolve_points(Family family, const Basis& basis, const Response& resp) {
    EvalPoints pts;
    const ResponseType rtype = family_response_type(family);
    const int top = basis.kind == BasisKind::discrete ? static_cast<int>(basis.levels.size()) - 1 : -1;

    auto side = [&](double y, bool is_upper) -> std::pair<bool, Eigen::VectorXd> {
        // returns {infinite, row}
        if (std::isinf(y)) return {true, {}};
        switch (rtype) {
            case ResponseType::discrete: {
                const int k = checked_level(basis, y);
                if (is_upper && k == top) return {true, {}};
                Eigen::VectorXd row = Eigen::VectorXd::Zero(basis.free_parameters());
                row[k] = 1.0;
                return {false, row};
            }
            case ResponseType::count: {
                const double yi = require_integer(y);
                return {false, finite_row(basis, yi)};
            }
            case ResponseType::continuous:
                return {false, finite_row(basis, y)};
        }
        return {true, {}};
    };

    if (resp.kind == CensorKind::exact) {
        switch (rtype) {
            case ResponseType::continuous:
                pts.point = finite_row(basis, resp.lower);
                pts.deriv = evaluate_derivative(basis, resp.lower);
                pts.exact_continuous = true;
                return pts;
            case ResponseType::discrete: {
                const int k = checked_level(basis, resp.lower);
                if (k == top) {
                    pts.hi_infinite = true;
                } else {
                    pts.hi = Eigen::VectorXd::Zero(basis.free_parameters());
                    pts.hi[k] = 1.0;
                }
                if (k == 0) {
                    pts.lo_infinite = true;
                } else {
                    pts.lo = Eigen::VectorXd::Zero(basis.free_parameters());
                    pts.lo[k - 1] = 1.0;
                }
                return pts;
            }
            case ResponseType::count: {
                const double yi = require_integer(resp.lower);
                pts.hi = finite_row(basis, yi);
                if (yi == 0.0)
                    pts.lo_infinite = true;
                else
                    pts.lo = finite_row(basis, yi - 1.0);
                return pts;
            }
        }
    }

    // censored: interval (lower, upper]
    auto [hi_inf, hi_row] = side(resp.upper, true);
    pts.hi_infinite = hi_inf;
    pts.hi = std::move(hi_row);
    auto [lo_inf, lo_row] = side(resp.lower, false);
    pts.lo_infinite = lo_inf;
    pts.lo = std::move(lo_row);
    if (pts.hi_infinite && pts.lo_infinite)
        throw std::invalid_argument("censoring interval covers the whole support");
    return pts;
}

// log(F(v_hi) - F(v_lo)) without cancellation; -inf when the cell is empty
// after rounding.
double interval_log_prob(ErrorDistribution err, bool lo_inf, double v_lo, bool hi_inf,
                         double v_hi) {
    double p;
    if (lo_inf && hi_inf) return 0.0;
    if (lo_inf)
        p = cdf(err, v_hi);
    else if (hi_inf)
        p = survival(err, v_lo);
    else if (v_lo > 0.0)
        p = survival(err, v_lo) - survival(err, v_hi);
    else
        p = cdf(err, v_hi) - cdf(err, v_lo);
    return p > 0.0 ? std::log(p) : -inf;
}

// Precomputed design of an entire dataset for one realized model structure.
struct Workspace {
    ErrorDistribution err;
    int n = 0, n_theta = 0, n_beta = 0, n_gamma = 0;
    std::vector<int8_t> exact_continuous;       // per row
    std::vector<int8_t> hi_inf, lo_inf;         // per row (interval rows)
    Eigen::MatrixXd point, deriv, hi, lo;       // n x n_theta, unused rows zero
    Eigen::MatrixXd covariates;                 // n x n_beta
    Eigen::MatrixXd env_design;                 // n x n_gamma

    int dim() const { return n_theta + n_beta + n_gamma; }
};

Workspace build_workspace(Family family, ErrorDistribution err, const Basis& basis,
                          const Dataset& data, bool include_env) {
    Workspace ws;
    ws.err = err;
    ws.n = data.n();
    ws.n_theta = basis.free_parameters();
    ws.n_beta = data.n_covariates();
    ws.n_gamma = include_env ? static_cast<int>(data.n_environments() * (1 + ws.n_beta)) : 0;
    ws.exact_continuous.assign(ws.n, 0);
    ws.hi_inf.assign(ws.n, 0);
    ws.lo_inf.assign(ws.n, 0);
    ws.point = Eigen::MatrixXd::Zero(ws.n, ws.n_theta);
    ws.deriv = Eigen::MatrixXd::Zero(ws.n, ws.n_theta);
    ws.hi = Eigen::MatrixXd::Zero(ws.n, ws.n_theta);
    ws.lo = Eigen::MatrixXd::Zero(ws.n, ws.n_theta);
    ws.covariates = data.covariates;
    if (include_env) {
        ws.env_design.resize(ws.n, ws.n_gamma);
        for (int i = 0; i < ws.n; ++i)
            ws.env_design.row(i) =
                environment_design(data.covariates.row(i), data.environments.row(i)).transpose();
    }
    for (int i = 0; i < ws.n; ++i) {
        EvalPoints pts = resolve_points(family, basis, data.response[i]);
        if (pts.exact_continuous) {
            ws.exact_continuous[i] = 1;
            ws.point.row(i) = pts.point.transpose();
            ws.deriv.row(i) = pts.deriv.transpose();
        } else {
            ws.hi_inf[i] = pts.hi_infinite;
            ws.lo_inf[i] = pts.lo_infinite;
            if (!pts.hi_infinite) ws.hi.row(i) = pts.hi.transpose();
            if (!pts.lo_infinite) ws.lo.row(i) = pts.lo.transpose();
        }
    }
    return ws;
}

// Total log-likelihood and its gradient with respect to
// vartheta = (theta_finite, beta, gamma). Returns -inf outside the domain.
double loglik_vartheta(const Workspace& ws, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                       Eigen::VectorXd* grad) {
    const Eigen::VectorXd shift =
        (ws.n_beta > 0 ? (ws.covariates * beta).eval() : Eigen::VectorXd::Zero(ws.n)) +
        (ws.n_gamma > 0 ? (ws.env_design * gamma).eval() : Eigen::VectorXd::Zero(ws.n));
    const Eigen::VectorXd v_point = ws.point * theta - shift;
    const Eigen::VectorXd v_deriv = ws.deriv * theta;
    const Eigen::VectorXd v_hi = ws.hi * theta - shift;
    const Eigen::VectorXd v_lo = ws.lo * theta - shift;

    double total = 0.0;
    Eigen::VectorXd grad_theta;
    Eigen::VectorXd w_shift;  // d loglik_i / d(shift row scale) = -score residual weight
    if (grad) {
        grad_theta = Eigen::VectorXd::Zero(ws.n_theta);
        w_shift = Eigen::VectorXd::Zero(ws.n);
    }

    for (int i = 0; i < ws.n; ++i) {
        if (ws.exact_continuous[i]) {
            const double v = v_point[i];
            const double hp = v_deriv[i];
            if (!std::isfinite(v) || !(hp > 0.0)) return -inf;
            const double li = log_density(ws.err, v) + std::log(hp);
            if (!std::isfinite(li)) return -inf;
            total += li;
            if (grad) {
                const double w = log_density_derivative(ws.err, v);
                grad_theta.noalias() += w * ws.point.row(i).transpose();
                grad_theta.noalias() += ws.deriv.row(i).transpose() / hp;
                w_shift[i] = w;
            }
        } else {
            const bool hi_inf_i = ws.hi_inf[i];
            const bool lo_inf_i = ws.lo_inf[i];
            const double vh = hi_inf_i ? inf : v_hi[i];
            const double vl = lo_inf_i ? -inf : v_lo[i];
            if ((!hi_inf_i && std::isnan(vh)) || (!lo_inf_i && std::isnan(vl))) return -inf;
            const double lp = interval_log_prob(ws.err, lo_inf_i, vl, hi_inf_i, vh);
            if (!std::isfinite(lp)) return -inf;
            total += lp;
            if (grad) {
                const double p = std::exp(lp);
                const double f_hi = hi_inf_i ? 0.0 : density(ws.err, vh);
                const double f_lo = lo_inf_i ? 0.0 : density(ws.err, vl);
                if (!hi_inf_i) grad_theta.noalias() += (f_hi / p) * ws.hi.row(i).transpose();
                if (!lo_inf_i) grad_theta.noalias() -= (f_lo / p) * ws.lo.row(i).transpose();
                w_shift[i] = (f_hi - f_lo) / p;
            }
        }
    }

    if (grad) {
        grad->resize(ws.dim());
        grad->head(ws.n_theta) = grad_theta;
        if (ws.n_beta > 0)
            grad->segment(ws.n_theta, ws.n_beta) = -(ws.covariates.transpose() * w_shift);
        if (ws.n_gamma > 0) grad->tail(ws.n_gamma) = -(ws.env_design.transpose() * w_shift);
    }
    return total;
}

// Analytic Hessian of the total log-likelihood in vartheta coordinates.
Eigen::MatrixXd loglik_hessian(const Workspace& ws, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma) {
    const int dim = ws.dim();
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
    const Eigen::VectorXd shift =
        (ws.n_beta > 0 ? (ws.covariates * beta).eval() : Eigen::VectorXd::Zero(ws.n)) +
        (ws.n_gamma > 0 ? (ws.env_design * gamma).eval() : Eigen::VectorXd::Zero(ws.n));

    Eigen::VectorXd c_hi(dim), c_lo(dim), c(dim);
    auto fill_chain = [&](Eigen::VectorXd& out, const Eigen::MatrixXd& rows, int i) {
        out.head(ws.n_theta) = rows.row(i).transpose();
        if (ws.n_beta > 0) out.segment(ws.n_theta, ws.n_beta) = -ws.covariates.row(i).transpose();
        if (ws.n_gamma > 0) out.tail(ws.n_gamma) = -ws.env_design.row(i).transpose();
    };

    for (int i = 0; i < ws.n; ++i) {
        if (ws.exact_continuous[i]) {
            const double v = ws.point.row(i).dot(theta) - shift[i];
            const double hp = ws.deriv.row(i).dot(theta);
            fill_chain(c, ws.point, i);
            hess.noalias() += log_density_second_derivative(ws.err, v) * (c * c.transpose());
            // second derivative of log(a'(y)' theta), theta block only
            hess.topLeftCorner(ws.n_theta, ws.n_theta).noalias() -=
                (ws.deriv.row(i).transpose() * ws.deriv.row(i)) / (hp * hp);
        } else {
            const bool hi_inf_i = ws.hi_inf[i];
            const bool lo_inf_i = ws.lo_inf[i];
            const double vh = hi_inf_i ? inf : ws.hi.row(i).dot(theta) - shift[i];
            const double vl = lo_inf_i ? -inf : ws.lo.row(i).dot(theta) - shift[i];
            const double lp = interval_log_prob(ws.err, lo_inf_i, vl, hi_inf_i, vh);
            const double p = std::exp(lp);
            const double f_hi = hi_inf_i ? 0.0 : density(ws.err, vh);
            const double f_lo = lo_inf_i ? 0.0 : density(ws.err, vl);
            const double fp_hi = hi_inf_i ? 0.0 : f_hi * log_density_derivative(ws.err, vh);
            const double fp_lo = lo_inf_i ? 0.0 : f_lo * log_density_derivative(ws.err, vl);
            const double h11 = fp_hi / p - (f_hi / p) * (f_hi / p);
            const double h22 = -fp_lo / p - (f_lo / p) * (f_lo / p);
            const double h12 = f_hi * f_lo / (p * p);
            if (!hi_inf_i) {
                fill_chain(c_hi, ws.hi, i);
                hess.noalias() += h11 * (c_hi * c_hi.transpose());
            }
            if (!lo_inf_i) {
                fill_chain(c_lo, ws.lo, i);
                hess.noalias() += h22 * (c_lo * c_lo.transpose());
            }
            if (!hi_inf_i && !lo_inf_i) {
                hess.noalias() += h12 * (c_hi * c_lo.transpose() + c_lo * c_hi.transpose());
            }
        }
    }
    return hess;
}

// Sum of score residuals and of their alpha-derivatives at the current
// parameters (both needed for the Newton recentering step).
void score_sums(const Workspace& ws, const Eigen::VectorXd& theta, const Eigen::VectorXd& beta,
                const Eigen::VectorXd& gamma, double* sum_r, double* sum_dr) {
    const Eigen::VectorXd shift =
        (ws.n_beta > 0 ? (ws.covariates * beta).eval() : Eigen::VectorXd::Zero(ws.n)) +
        (ws.n_gamma > 0 ? (ws.env_design * gamma).eval() : Eigen::VectorXd::Zero(ws.n));
    double r_total = 0.0, dr_total = 0.0;
    for (int i = 0; i < ws.n; ++i) {
        if (ws.exact_continuous[i]) {
            const double v = ws.point.row(i).dot(theta) - shift[i];
            r_total += log_density_derivative(ws.err, v);
            dr_total += log_density_second_derivative(ws.err, v);
        } else {
            const bool hi_inf_i = ws.hi_inf[i];
            const bool lo_inf_i = ws.lo_inf[i];
            const double vh = hi_inf_i ? inf : ws.hi.row(i).dot(theta) - shift[i];
            const double vl = lo_inf_i ? -inf : ws.lo.row(i).dot(theta) - shift[i];
            const double p =
                std::exp(interval_log_prob(ws.err, lo_inf_i, vl, hi_inf_i, vh));
            const double f_hi = hi_inf_i ? 0.0 : density(ws.err, vh);
            const double f_lo = lo_inf_i ? 0.0 : density(ws.err, vl);
            const double fp_hi = hi_inf_i ? 0.0 : f_hi * log_density_derivative(ws.err, vh);
            const double fp_lo = lo_inf_i ? 0.0 : f_lo * log_density_derivative(ws.err, vl);
            const double r = (f_hi - f_lo) / p;
            r_total += r;
            dr_total += (fp_hi - fp_lo) / p - r * r;
        }
    }
    *sum_r = r_total;
    *sum_dr = dr_total;
}

Basis realize_basis(const TramSpec& spec, const Dataset& data) {
    std::vector<double> finite_points;
    std::vector<double> exact_values;
    for (const Response& r : data.response) {
        if (std::isfinite(r.lower)) finite_points.push_back(r.lower);
        if (std::isfinite(r.upper) && r.upper != r.lower) finite_points.push_back(r.upper);
        if (r.kind == CensorKind::exact) exact_values.push_back(r.lower);
    }
    if (finite_points.empty()) throw std::invalid_argument("fit: no finite response information");
    const double y_min = *std::min_element(finite_points.begin(), finite_points.end());
    const double y_max = *std::max_element(finite_points.begin(), finite_points.end());

    switch (spec.family) {
        case Family::lm: return linear_basis();
        case Family::weibull:
            if (!(y_min > 0.0)) throw std::domain_error("weibull: responses must be positive");
            return log_linear_basis();
        case Family::binary:
        case Family::polr: {
            std::set<double> level_set(finite_points.begin(), finite_points.end());
            Eigen::VectorXd levels(static_cast<Eigen::Index>(level_set.size()));
            int k = 0;
            for (double v : level_set) levels[k++] = v;
            if (spec.family == Family::binary && levels.size() != 2)
                throw std::invalid_argument("binary: response must take exactly two values");
            return discrete_basis(std::move(levels));
        }
        case Family::cotram: {
            for (double v : finite_points) require_integer(v);
            const double lo = std::max(0.0, std::round(y_min) - 1.0);
            const double hi = std::round(y_max);
            const double range = std::max(1.0, hi - lo);
            return bernstein_basis(spec.bernstein_order, lo - 0.1 * range, hi + 0.1 * range);
        }
        case Family::boxcox:
        case Family::colr:
        case Family::coxph:
            return bernstein_basis_for_range(spec.bernstein_order, y_min, y_max);
    }
    throw std::logic_error("realize_basis: unknown family");
}

// Intercept-only starting values: empirical CDF pushed through the error
// quantile function. Censored responses enter through a midpoint surrogate.
Eigen::VectorXd initial_raw(const TramSpec& spec, const Basis& basis, const Dataset& data) {
    std::vector<double> pseudo;
    pseudo.reserve(data.response.size());
    for (const Response& r : data.response) {
        switch (r.kind) {
            case CensorKind::exact: pseudo.push_back(r.lower); break;
            case CensorKind::left: pseudo.push_back(r.upper); break;
            case CensorKind::right: pseudo.push_back(r.lower); break;
            case CensorKind::interval: pseudo.push_back(0.5 * (r.lower + r.upper)); break;
        }
    }
    const double n = static_cast<double>(pseudo.size());
    std::sort(pseudo.begin(), pseudo.end());
    auto ecdf = [&](double y) {
        const auto it = std::upper_bound(pseudo.begin(), pseudo.end(), y);
        const double count = static_cast<double>(it - pseudo.begin());
        return std::min(std::max(count / (n + 1.0), 1.0 / (n + 1.0)), n / (n + 1.0));
    };

    switch (basis.kind) {
        case BasisKind::linear:
        case BasisKind::log_linear: {
            std::vector<double> t(pseudo);
            if (basis.kind == BasisKind::log_linear)
                for (double& v : t) v = std::log(std::max(v, 1e-12));
            double mean = 0.0;
            for (double v : t) mean += v;
            mean /= n;
            double var = 0.0;
            for (double v : t) var += (v - mean) * (v - mean);
            var = std::max(var / n, 1e-12);
            const double scale = 1.0 / std::sqrt(var);
            Eigen::VectorXd theta(2);
            theta << -mean * scale, scale;
            return unconstrain(basis, theta);
        }
        case BasisKind::bernstein: {
            const int m = basis.order;
            Eigen::VectorXd theta(m + 1);
            for (int j = 0; j <= m; ++j) {
                const double grid = basis.lower + (basis.upper - basis.lower) * j / m;
                theta[j] = quantile(spec.error, ecdf(grid));
                if (j > 0) theta[j] = std::max(theta[j], theta[j - 1] + 1e-3);
            }
            return unconstrain(basis, theta);
        }
        case BasisKind::discrete: {
            const int n_cut = basis.free_parameters();
            Eigen::VectorXd theta(n_cut);
            for (int k = 0; k < n_cut; ++k) {
                theta[k] = quantile(spec.error, ecdf(basis.levels[k]));
                if (k > 0) theta[k] = std::max(theta[k], theta[k - 1] + 1e-3);
            }
            Eigen::VectorXd full(n_cut + 1);
            full.head(n_cut) = theta;
            full[n_cut] = inf;
            return unconstrain(basis, full);
        }
    }
    throw std::logic_error("initial_raw: unknown basis kind");
}

std::vector<int> fixed_raw_indices(const Basis& basis, const Dataset& data) {
    std::vector<int> fixed;
    if (basis.kind != BasisKind::discrete) return fixed;
    const int n_levels = static_cast<int>(basis.levels.size());
    std::vector<int> counts(n_levels, 0);
    for (const Response& r : data.response) {
        if (r.kind != CensorKind::exact) continue;
        const int k = discrete_level_index(basis, r.lower);
        if (k >= 0) ++counts[k];
    }
    // a zero-count interior cell puts the MLE on the boundary; pin its
    // cutpoint increment instead of letting it collapse
    for (int k = 1; k + 1 < n_levels; ++k)
        if (counts[k] == 0) fixed.push_back(k);
    return fixed;
}

}  // namespace

double transformation(const FittedTram& model, double y, const Eigen::VectorXd& x,
                      const Eigen::VectorXd* e) {
    if (x.size() != model.beta.size())
        throw std::invalid_argument("transformation: covariate dimension mismatch");
    if ((e != nullptr) != (model.gamma.size() > 0))
        throw std::invalid_argument("transformation: environment argument does not match model");
    double h = evaluate(model.basis, y).dot(model.theta.theta);
    if (x.size() > 0) h -= x.dot(model.beta);
    if (e) {
        if (e->size() != model.env_dim)
            throw std::invalid_argument("transformation: environment dimension mismatch");
        h -= environment_design(x, *e).dot(model.gamma);
    }
    return h;
}

namespace {

Eigen::VectorXd theta_finite(const FittedTram& model) {
    return model.theta.theta.head(model.basis.free_parameters());
}

double observation_shift(const FittedTram& model, const Observation& obs) {
    if (obs.covariates.size() != model.beta.size())
        throw std::invalid_argument("covariate dimension mismatch");
    double shift = obs.covariates.size() > 0 ? obs.covariates.dot(model.beta) : 0.0;
    if (model.gamma.size() > 0) {
        if (obs.environment.size() != model.env_dim)
            throw std::invalid_argument("environment dimension mismatch");
        shift += environment_design(obs.covariates, obs.environment).dot(model.gamma);
    }
    return shift;
}

}  // namespace

double log_likelihood(const FittedTram& model, const Observation& obs, double shift_h) {
    const Eigen::VectorXd theta = theta_finite(model);
    const double shift = observation_shift(model, obs) - shift_h;
    const EvalPoints pts = resolve_points(model.spec.family, model.basis, obs.response);
    if (pts.exact_continuous) {
        const double v = pts.point.dot(theta) - shift;
        const double hp = pts.deriv.dot(theta);
        if (!(hp > 0.0) || !std::isfinite(v)) return -inf;
        return log_density(model.spec.error, v) + std::log(hp);
    }
    const double vh = pts.hi_infinite ? inf : pts.hi.dot(theta) - shift;
    const double vl = pts.lo_infinite ? -inf : pts.lo.dot(theta) - shift;
    return interval_log_prob(model.spec.error, pts.lo_infinite, vl, pts.hi_infinite, vh);
}

double score_residual(const FittedTram& model, const Observation& obs, bool* clipped) {
    const Eigen::VectorXd theta = theta_finite(model);
    const double shift = observation_shift(model, obs);
    const EvalPoints pts = resolve_points(model.spec.family, model.basis, obs.response);
    if (clipped) *clipped = false;
    double r;
    if (pts.exact_continuous) {
        const double v = pts.point.dot(theta) - shift;
        r = std::isfinite(v) ? log_density_derivative(model.spec.error, v)
                             : std::numeric_limits<double>::quiet_NaN();
    } else {
        const double vh = pts.hi_infinite ? inf : pts.hi.dot(theta) - shift;
        const double vl = pts.lo_infinite ? -inf : pts.lo.dot(theta) - shift;
        const double p =
            std::exp(interval_log_prob(model.spec.error, pts.lo_infinite, vl, pts.hi_infinite, vh));
        const double f_hi = pts.hi_infinite ? 0.0 : density(model.spec.error, vh);
        const double f_lo = pts.lo_infinite ? 0.0 : density(model.spec.error, vl);
        r = (f_hi - f_lo) / p;
    }
    if (!std::isfinite(r) || std::abs(r) > residual_clip) {
        if (clipped) *clipped = true;
        r = std::isnan(r) ? 0.0 : std::copysign(residual_clip, r);
    }
    return r;
}

double inverse_transformation(const FittedTram& model, double z, const Eigen::VectorXd& x) {
    if (model.gamma.size() > 0)
        throw std::logic_error("inverse_transformation: model has environment terms");
    if (x.size() != model.beta.size())
        throw std::invalid_argument("inverse_transformation: covariate dimension mismatch");
    const double v = z + (x.size() > 0 ? x.dot(model.beta) : 0.0);  // solve h_Y(y) = v
    const Basis& basis = model.basis;
    const Eigen::VectorXd& theta = model.theta.theta;

    switch (basis.kind) {
        case BasisKind::discrete: {
            for (int k = 0; k < basis.levels.size(); ++k)
                if (v <= theta[k]) return basis.levels[k];
            return basis.levels[basis.levels.size() - 1];
        }
        case BasisKind::linear:
            if (std::isinf(v)) return v;
            return (v - theta[0]) / theta[1];
        case BasisKind::log_linear:
            if (v == -inf) return 0.0;
            if (v == inf) return inf;
            return std::exp((v - theta[0]) / theta[1]);
        case BasisKind::bernstein: {
            auto h_y = [&](double y) { return evaluate(basis, y).dot(theta); };
            const bool count = family_response_type(model.spec.family) == ResponseType::count;
            const double y_lo = count ? std::max(0.0, std::ceil(basis.lower)) : basis.lower;
            const double y_hi = count ? std::floor(basis.upper) : basis.upper;
            if (v <= h_y(y_lo)) return y_lo;
            if (v >= h_y(y_hi)) return y_hi;
            double lo = y_lo, hi = y_hi;
            for (int iter = 0; iter < 200; ++iter) {
                const double mid = 0.5 * (lo + hi);
                if (h_y(mid) >= v)
                    hi = mid;
                else
                    lo = mid;
                if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) break;
            }
            // smallest support value with h(y) >= v
            return count ? std::ceil(hi - 1e-9) : hi;
        }
    }
    throw std::logic_error("inverse_transformation: unknown basis kind");
}

double sample(const FittedTram& model, const Eigen::VectorXd& x, Rng& rng) {
    return inverse_transformation(model, quantile(model.spec.error, rng.uniform()), x);
}

FittedTram fit(const TramSpec& spec, const Dataset& data, const FitOptions& options) {
    data.check_consistent();
    FittedTram model;
    model.spec = spec;
    model.basis = realize_basis(spec, data);
    model.env_dim = options.include_env_interactions ? data.n_environments() : 0;

    Workspace ws = build_workspace(spec.family, spec.error, model.basis, data,
                                   options.include_env_interactions);
    const int n_theta = ws.n_theta, n_beta = ws.n_beta, n_gamma = ws.n_gamma;
    const int dim = ws.dim();
    if (ws.n < dim + 1)
        throw std::invalid_argument("fit: need at least one more observation than parameters");

    Eigen::VectorXd raw_full(dim);
    raw_full.head(n_theta) = initial_raw(spec, model.basis, data);
    raw_full.tail(n_beta + n_gamma).setZero();

    const std::vector<int> fixed = fixed_raw_indices(model.basis, data);
    for (int k : fixed) raw_full[k] = std::log(1e-3);
    std::vector<int> free_idx;
    for (int j = 0; j < dim; ++j)
        if (std::find(fixed.begin(), fixed.end(), j) == fixed.end()) free_idx.push_back(j);

    const double n_inv = 1.0 / ws.n;
    auto expand = [&](const Eigen::VectorXd& x_free) {
        Eigen::VectorXd full = raw_full;
        for (std::size_t j = 0; j < free_idx.size(); ++j) full[free_idx[j]] = x_free[j];
        return full;
    };

    // minimize the mean negative log-likelihood over the free raw parameters
    auto objective = [&](const Eigen::VectorXd& x_free, Eigen::VectorXd* grad) -> double {
        const Eigen::VectorXd full = expand(x_free);
        const BaselineParams bp = constrain(model.basis, full.head(n_theta));
        const Eigen::VectorXd beta = full.segment(n_theta, n_beta);
        const Eigen::VectorXd gamma = full.tail(n_gamma);
        Eigen::VectorXd grad_vartheta;
        const double ll = loglik_vartheta(ws, bp.theta.head(n_theta), beta, gamma,
                                          grad ? &grad_vartheta : nullptr);
        if (!std::isfinite(ll)) return inf;
        if (grad) {
            const Eigen::MatrixXd jac = constrain_jacobian(model.basis, full.head(n_theta));
            Eigen::VectorXd full_grad(dim);
            full_grad.head(n_theta) = jac.transpose() * grad_vartheta.head(n_theta);
            full_grad.tail(n_beta + n_gamma) = grad_vartheta.tail(n_beta + n_gamma);
            grad->resize(static_cast<Eigen::Index>(free_idx.size()));
            for (std::size_t j = 0; j < free_idx.size(); ++j)
                (*grad)[j] = -n_inv * full_grad[free_idx[j]];
        }
        return -n_inv * ll;
    };

    Eigen::VectorXd x0(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t j = 0; j < free_idx.size(); ++j) x0[j] = raw_full[free_idx[j]];

    OptimOptions opt_options;
    opt_options.max_iterations = options.max_iterations;
    opt_options.gradient_tolerance = options.gradient_tolerance;
    OptimResult opt = bfgs_minimize(objective, x0, opt_options);
    raw_full = expand(opt.x);

    // Newton recentering along the constant-shift direction: enforces the
    // in-sample score equation sum_i R_i = 0 to machine accuracy
    if (std::isfinite(opt.f)) {
        for (int iter = 0; iter < 10; ++iter) {
            const BaselineParams bp = constrain(model.basis, raw_full.head(n_theta));
            double sum_r = 0.0, sum_dr = 0.0;
            score_sums(ws, bp.theta.head(n_theta), raw_full.segment(n_theta, n_beta),
                       raw_full.tail(n_gamma), &sum_r, &sum_dr);
            if (!std::isfinite(sum_r) || !std::isfinite(sum_dr) || sum_dr >= -1e-300) break;
            if (std::abs(sum_r) <= ws.n * 1e-12) break;
            raw_full[0] -= sum_r / sum_dr;
        }
    }

    model.theta = constrain(model.basis, raw_full.head(n_theta));
    model.beta = raw_full.segment(n_theta, n_beta);
    model.gamma = raw_full.tail(n_gamma);
    model.iterations = opt.iterations;

    Eigen::VectorXd final_grad;
    model.loglik = loglik_vartheta(ws, model.theta.theta.head(n_theta), model.beta, model.gamma,
                                   &final_grad);
    const Eigen::MatrixXd jac = constrain_jacobian(model.basis, raw_full.head(n_theta));
    Eigen::VectorXd raw_grad(dim);
    raw_grad.head(n_theta) = jac.transpose() * final_grad.head(n_theta);
    raw_grad.tail(n_beta + n_gamma) = final_grad.tail(n_beta + n_gamma);
    double g_norm = 0.0;
    for (int j : free_idx) g_norm = std::max(g_norm, std::abs(n_inv * raw_grad[j]));
    model.gradient_norm = g_norm;
    model.converged = std::isfinite(model.loglik) && !opt.line_search_failed && g_norm <= 1e-6;
    if (spec.family == Family::binary && model.beta.size() > 0)
        model.separation = model.beta.cwiseAbs().maxCoeff() > 50.0;
    return model;
}

Eigen::MatrixXd observed_information(const FittedTram& model, const Dataset& data) {
    Workspace ws = build_workspace(model.spec.family, model.spec.error, model.basis, data,
                                   model.gamma.size() > 0);
    const Eigen::MatrixXd hess = loglik_hessian(ws, model.theta.theta.head(ws.n_theta), model.beta,
                                                model.gamma);
    return -0.5 * (hess + hess.transpose());
}

double total_log_likelihood(const FittedTram& model, const Dataset& data) {
    Workspace ws = build_workspace(model.spec.family, model.spec.error, model.basis, data,
                                   model.gamma.size() > 0);
    return loglik_vartheta(ws, model.theta.theta.head(ws.n_theta), model.beta, model.gamma,
                           nullptr);
}

}  // namespace tramicp
