#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace tramicp {

enum class CensorKind { exact, left, right, interval };

// Every response is represented by the half-open interval (lower, upper] it
// is known to lie in: exact y has lower = upper = y, a left-censored bound l
// gives (-inf, l], a right-censored bound u gives (u, +inf), and an
// interval-censored pair gives (l, u].
struct Response {
    CensorKind kind = CensorKind::exact;
    double lower = 0.0;
    double upper = 0.0;

    static Response exact(double y) { return {CensorKind::exact, y, y}; }
    static Response left_censored(double l) {
        return {CensorKind::left, -std::numeric_limits<double>::infinity(), l};
    }
    static Response right_censored(double u) {
        return {CensorKind::right, u, std::numeric_limits<double>::infinity()};
    }
    static Response interval_censored(double l, double u);
};

struct Observation {
    Response response;
    Eigen::VectorXd covariates;
    Eigen::VectorXd environment;
};

struct Dataset {
    std::vector<Response> response;
    Eigen::MatrixXd covariates;    // n x d
    Eigen::MatrixXd environments;  // n x q
    std::vector<std::string> covariate_names;
    std::vector<std::string> environment_names;
    std::string response_name = "Y";

    int n() const { return static_cast<int>(response.size()); }
    int n_covariates() const { return static_cast<int>(covariates.cols()); }
    int n_environments() const { return static_cast<int>(environments.cols()); }

    Observation observation(int i) const {
        return {response[i], covariates.row(i), environments.row(i)};
    }

    void check_consistent() const;
};

// Dataset restricted to the covariate columns in S (order preserved).
Dataset select_covariates(const Dataset& data, const std::vector<int>& subset);

// Indices that sort rows by (covariates, environments, response bounds);
// used to make row order irrelevant for seeded resampling.
std::vector<int> canonical_row_order(const Dataset& data);

Dataset reorder_rows(const Dataset& data, const std::vector<int>& order);

}  // namespace tramicp
