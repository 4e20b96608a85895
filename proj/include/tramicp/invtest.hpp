#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tramicp/dataset.hpp"
#include "tramicp/regress.hpp"
#include "tramicp/tram.hpp"

namespace tramicp {

enum class TestKind { gcm, wald, cor };
TestKind test_kind_from_token(std::string_view token);
std::string_view test_kind_token(TestKind t);

struct TestResult {
    double p_value = 1.0;
    double statistic = 0.0;
    int df = 0;
    bool converged = true;  // TRAM fit(s) behind the statistic converged
    std::map<std::string, double> diagnostics;
};

// Survival function of the chi-square distribution, 1 - F_{chi^2_df}(stat).
double chi_sq_sf(double stat, int df);

struct InvarianceOptions {
    MeanModelKind mu = MeanModelKind::forest;
    ForestOptions forest;
    std::uint64_t seed = 1;
};

// Covariance-residual test statistic from precomputed residual products
// L_i = R_i (e_i - mu(x_i)): mean-centered covariance, inverse square root
// on the retained eigenspace, squared norm against chi-square.
TestResult gcm_statistic_from_products(const Eigen::MatrixXd& products);

// Score-residual invariance test for the covariate subset S: fit the model
// on (Y, X^S), residualize E on X^S, test the residual products.
TestResult tram_gcm(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec,
                    const InvarianceOptions& options);

// Wald test of the environment main and interaction coefficients in the
// gamma-augmented model.
TestResult tram_wald(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec);

// Pearson correlation between score residuals and the (univariate, raw)
// environment; anti-conservative under flexible fits, kept as a comparator.
TestResult tram_cor(const Dataset& data, const std::vector<int>& subset, const TramSpec& spec);

TestResult run_invariance_test(TestKind kind, const Dataset& data, const std::vector<int>& subset,
                               const TramSpec& spec, const InvarianceOptions& options);

}  // namespace tramicp
