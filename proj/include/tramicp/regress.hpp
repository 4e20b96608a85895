#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>
#include <vector>

namespace tramicp {

// Estimator of mu(x) = E[E | X = x] used to residualize the environments.
enum class MeanModelKind { forest, linear, constant };

struct ForestOptions {
    int n_trees = 100;
    int min_leaf = 5;
    int mtry = 0;            // 0: max(1, floor(p / 3))
    bool out_of_bag = true;  // training predictions from out-of-bag trees
};

namespace detail {
struct RegressionTree {
    std::vector<int> feature;    // -1 for leaves
    std::vector<double> threshold;
    std::vector<int> left, right;
    std::vector<double> value;
    std::vector<std::uint8_t> in_bag;  // per training row

    double predict(const Eigen::VectorXd& x) const;
};
}  // namespace detail

class MeanModel {
  public:
    MeanModelKind kind() const { return kind_; }
    int n_inputs() const { return n_inputs_; }
    int n_outputs() const { return n_outputs_; }

    // Conditional-mean estimate at a new point.
    Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

    // Per-training-row estimates, n x q; out-of-bag for forests (in-bag rows
    // with no out-of-bag tree fall back to the full forest).
    const Eigen::MatrixXd& training_predictions() const { return training_predictions_; }

    friend MeanModel fit_conditional_mean(const Eigen::MatrixXd& inputs,
                                          const Eigen::MatrixXd& targets, MeanModelKind kind,
                                          const ForestOptions& options, std::uint64_t seed);

  private:
    MeanModelKind kind_ = MeanModelKind::constant;
    int n_inputs_ = 0, n_outputs_ = 0;
    Eigen::VectorXd constant_mean_;
    Eigen::MatrixXd linear_coef_;  // (p + 1) x q, intercept first
    std::vector<std::vector<detail::RegressionTree>> forests_;  // per output column
    Eigen::MatrixXd training_predictions_;
};

// Fits E[targets | inputs] column by column. An empty conditioning set
// (inputs with 0 columns) always yields the column-mean model.
MeanModel fit_conditional_mean(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               MeanModelKind kind, const ForestOptions& options = {},
                               std::uint64_t seed = 1);

MeanModelKind mean_model_kind_from_token(std::string_view token);

}  // namespace tramicp
