#include "tramicp/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tramicp {

Response Response::interval_censored(double l, double u) {
    if (!(l < u)) throw std::invalid_argument("interval censoring requires l < u");
    return {CensorKind::interval, l, u};
}

void Dataset::check_consistent() const {
    const int rows = n();
    if (covariates.rows() != rows || environments.rows() != rows)
        throw std::invalid_argument("dataset: row counts disagree");
}

Dataset select_covariates(const Dataset& data, const std::vector<int>& subset) {
    Dataset out;
    out.response = data.response;
    out.environments = data.environments;
    out.environment_names = data.environment_names;
    out.response_name = data.response_name;
    out.covariates.resize(data.n(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t j = 0; j < subset.size(); ++j) {
        const int col = subset[j];
        if (col < 0 || col >= data.n_covariates())
            throw std::invalid_argument("select_covariates: index out of range");
        out.covariates.col(static_cast<Eigen::Index>(j)) = data.covariates.col(col);
        if (col < static_cast<int>(data.covariate_names.size()))
            out.covariate_names.push_back(data.covariate_names[col]);
    }
    return out;
}

std::vector<int> canonical_row_order(const Dataset& data) {
    std::vector<int> order(data.n());
    std::iota(order.begin(), order.end(), 0);
    auto row_less = [&](int a, int b) {
        for (int j = 0; j < data.n_covariates(); ++j) {
            if (data.covariates(a, j) != data.covariates(b, j))
                return data.covariates(a, j) < data.covariates(b, j);
        }
        for (int j = 0; j < data.n_environments(); ++j) {
            if (data.environments(a, j) != data.environments(b, j))
                return data.environments(a, j) < data.environments(b, j);
        }
        if (data.response[a].lower != data.response[b].lower)
            return data.response[a].lower < data.response[b].lower;
        if (data.response[a].upper != data.response[b].upper)
            return data.response[a].upper < data.response[b].upper;
        return false;
    };
    std::stable_sort(order.begin(), order.end(), row_less);
    return order;
}

Dataset reorder_rows(const Dataset& data, const std::vector<int>& order) {
    Dataset out;
    out.covariate_names = data.covariate_names;
    out.environment_names = data.environment_names;
    out.response_name = data.response_name;
    out.covariates.resize(data.covariates.rows(), data.covariates.cols());
    out.environments.resize(data.environments.rows(), data.environments.cols());
    out.response.resize(data.response.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.covariates.row(static_cast<Eigen::Index>(i)) = data.covariates.row(order[i]);
        out.environments.row(static_cast<Eigen::Index>(i)) = data.environments.row(order[i]);
        out.response[i] = data.response[order[i]];
    }
    return out;
}

}  // namespace tramicp
