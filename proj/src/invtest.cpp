#include "tramicp/invtest.hpp"

#include <cmath>
#include <stdexcept>

#include "tramicp/special.hpp"

namespace tramicp {

namespace {
constexpr double sigma_eigen_floor = 1e-12;  // relative, residual covariance
constexpr double wald_rank_floor = 1e-10;    // relative, gamma covariance block

// Stable tag of a subset for seeding, invariant to enumeration order.
std::uint64_t subset_tag(const std::vector<int>& subset) {
    std::uint64_t tag = 0x6a09e667f3bcc909ULL;
    for (int j : subset) tag = (tag ^ (0x100000001b3ULL * (j + 1))) * 0x9e3779b97f4a7c15ULL;
    return tag;
}
}  // namespace

TestKind test_kind_from_token(std::string_view token) {
    if (token == "gcm") return TestKind::gcm;
    if (token == "wald") return TestKind::wald;
    if (token == "cor") return TestKind::cor;
    throw std::invalid_argument("unknown test token: " + std::string(token));
}

std::string_view test_kind_token(TestKind t) {
    switch (t) {
        case TestKind::gcm: return "gcm";
        case TestKind::wald: return "wald";
        case TestKind::cor: return "cor";
    }
    return "";
}

double chi_sq_sf(double stat, int df) {
    if (df <= 0) throw std::domain_error("chi_sq_sf: df must be positive");
    if (!(stat >= 0.0)) throw std::domain_error("chi_sq_sf: statistic must be nonnegative");
    return gamma_q(0.5 * df, 0.5 * stat);
}

TestResult gcm_statistic_from_products(const Eigen::MatrixXd& products) {
    const int n = static_cast<int>(products.rows());
    const int q = static_cast<int>(products.cols());
    if (n < 2 || q < 1) throw std::invalid_argument("gcm statistic: degenerate product matrix");

    const Eigen::VectorXd mean = products.colwise().mean();
    Eigen::MatrixXd sigma = (products.transpose() * products) / n - mean * mean.transpose();
    sigma = 0.5 * (sigma + sigma.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(sigma);
    const Eigen::VectorXd values = eigen.eigenvalues();
    const double lambda_max = values.cwiseAbs().maxCoeff();
    const double floor = sigma_eigen_floor * std::max(lambda_max, 1e-300);

    const Eigen::VectorXd sum_scaled = products.colwise().sum() / std::sqrt(double(n));
    double stat = 0.0;
    int rank = 0;
    for (int j = 0; j < q; ++j) {
        if (values[j] < floor) continue;
        const double coord = eigen.eigenvectors().col(j).dot(sum_scaled);
        stat += coord * coord / values[j];
        ++rank;
    }

    TestResult result;
    result.statistic = stat;
    result.df = rank;
    result.p_value = rank > 0 ? chi_sq_sf(stat, rank) : 1.0;
    result.diagnostics["sigma_rank"] = rank;
    result.diagnostics["sigma_condition"] =
        rank > 0 ? lambda_max / values.tail(rank).minCoeff() : std::numeric_limits<double>::infinity();
    if (rank < q) result.diagnostics["sigma_rank_deficient"] = 1.0;
    return result;
}

TestResult tram_gcm(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec,
                    const InvarianceOptions& options) {
    const int q = data.n_environments();
    if (data.n() <= q + 2) throw std::invalid_argument("tram_gcm: too few observations");

    // canonical row order decouples the seeded bootstrap from input order
    const Dataset sub = reorder_rows(select_covariates(data, subset), canonical_row_order(
                                         select_covariates(data, subset)));
    const FittedTram model = fit(spec, sub);

    MeanModel mu = fit_conditional_mean(sub.covariates, sub.environments,
                                        subset.empty() ? MeanModelKind::constant : options.mu,
                                        options.forest,
                                        derive_seed(options.seed, subset_tag(subset)));

    const int n = sub.n();
    Eigen::MatrixXd products(n, q);
    int clipped = 0;
    for (int i = 0; i < n; ++i) {
        bool clip = false;
        const double r = score_residual(model, sub.observation(i), &clip);
        clipped += clip;
        products.row(i) =
            r * (sub.environments.row(i) - mu.training_predictions().row(i));
    }

    TestResult result = gcm_statistic_from_products(products);
    result.converged = model.converged;
    result.diagnostics["tram_converged"] = model.converged ? 1.0 : 0.0;
    result.diagnostics["clipped_residuals"] = clipped;
    return result;
}

TestResult tram_wald(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec) {
    const Dataset sub = select_covariates(data, subset);
    FitOptions fit_options;
    fit_options.include_env_interactions = true;
    const FittedTram model = fit(spec, sub, fit_options);
    const int m = static_cast<int>(model.gamma.size());

    const Eigen::MatrixXd info = observed_information(model, sub);
    const int dim = static_cast<int>(info.rows());

    // gamma block of the inverse information, through the eigenspace of the
    // full information so that near-singular fits degrade to a rank-deficient
    // covariance instead of a numerical explosion
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> info_eigen(info);
    const double info_max = info_eigen.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd inv_values(dim);
    bool info_singular = false;
    for (int j = 0; j < dim; ++j) {
        const double v = info_eigen.eigenvalues()[j];
        if (v > sigma_eigen_floor * std::max(info_max, 1e-300)) {
            inv_values[j] = 1.0 / v;
        } else {
            inv_values[j] = 0.0;
            info_singular = true;
        }
    }
    const Eigen::MatrixXd inverse_info = info_eigen.eigenvectors() * inv_values.asDiagonal() *
                                         info_eigen.eigenvectors().transpose();
    Eigen::MatrixXd sigma_gamma = inverse_info.bottomRightCorner(m, m);
    sigma_gamma = 0.5 * (sigma_gamma + sigma_gamma.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(sigma_gamma);
    const double lambda_max = eigen.eigenvalues().cwiseAbs().maxCoeff();
    const double floor = wald_rank_floor * std::max(lambda_max, 1e-300);
    double stat = 0.0;
    int rank = 0;
    for (int j = 0; j < m; ++j) {
        if (eigen.eigenvalues()[j] < floor) continue;
        const double coord = eigen.eigenvectors().col(j).dot(model.gamma);
        stat += coord * coord / eigen.eigenvalues()[j];
        ++rank;
    }

    TestResult result;
    result.statistic = stat;
    result.df = rank;
    result.p_value = rank > 0 ? chi_sq_sf(stat, rank) : 1.0;
    result.converged = model.converged;
    result.diagnostics["gamma_dim"] = m;
    result.diagnostics["gamma_rank"] = rank;
    result.diagnostics["tram_converged"] = model.converged ? 1.0 : 0.0;
    if (info_singular) result.diagnostics["information_singular"] = 1.0;
    if (rank == 0) result.diagnostics["gamma_rank_zero"] = 1.0;
    return result;
}

TestResult tram_cor(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec) {
    if (data.n_environments() != 1)
        throw std::invalid_argument("tram_cor: requires a univariate environment");
    const Dataset sub = select_covariates(data, subset);
    const FittedTram model = fit(spec, sub);

    const int n = sub.n();
    Eigen::VectorXd residuals(n);
    int clipped = 0;
    for (int i = 0; i < n; ++i) {
        bool clip = false;
        residuals[i] = score_residual(model, sub.observation(i), &clip);
        clipped += clip;
    }
    const Eigen::VectorXd env = sub.environments.col(0);

    const Eigen::VectorXd rc = residuals.array() - residuals.mean();
    const Eigen::VectorXd ec = env.array() - env.mean();
    const double denom = rc.norm() * ec.norm();

    TestResult result;
    result.df = n - 2;
    result.converged = model.converged;
    result.diagnostics["tram_converged"] = model.converged ? 1.0 : 0.0;
    result.diagnostics["clipped_residuals"] = clipped;
    if (denom <= 0.0) {
        result.p_value = 1.0;
        result.diagnostics["degenerate_variance"] = 1.0;
        return result;
    }
    double corr = rc.dot(ec) / denom;
    corr = std::min(1.0, std::max(-1.0, corr));
    if (std::abs(corr) >= 1.0) {
        result.statistic = std::numeric_limits<double>::infinity();
        result.p_value = 0.0;
        return result;
    }
    const double t = corr * std::sqrt((n - 2) / (1.0 - corr * corr));
    result.statistic = t;
    result.p_value = student_t_two_sided(t, n - 2);
    return result;
}

TestResult run_invariance_test(TestKind kind, const Dataset& data, const std::vector<int>& subset,
                               const TramSpec& spec, const InvarianceOptions& options) {
    switch (kind) {
        case TestKind::gcm: return tram_gcm(data, subset, spec, options);
        case TestKind::wald: return tram_wald(data, subset, spec);
        case TestKind::cor: return tram_cor(data, subset, spec);
    }
    throw std::logic_error("run_invariance_test: unknown kind");
}

}  // namespace tramicp
