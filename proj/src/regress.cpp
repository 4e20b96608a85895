#include "tramicp/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string_view>

#include "tramicp/rng.hpp"

namespace tramicp {

namespace detail {

double RegressionTree::predict(const Eigen::VectorXd& x) const {
    int node = 0;
    while (feature[node] >= 0)
        node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
    return value[node];
}

namespace {

struct TreeBuilder {
    const Eigen::MatrixXd& inputs;
    const Eigen::VectorXd& targets;
    int min_leaf;
    int mtry;
    Rng& rng;
    RegressionTree& tree;
    std::vector<int>& indices;  // bootstrap sample, partitioned in place
    std::vector<std::pair<double, double>> scratch;
    std::vector<int> feature_pool;

    int make_node() {
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(0.0);
        return static_cast<int>(tree.feature.size()) - 1;
    }

    // best split on one feature within [begin, end): returns improvement in
    // -SSE (to be maximized) or -inf when no valid split exists
    bool best_split(int feat, int begin, int end, double* score, double* threshold) {
        scratch.clear();
        for (int i = begin; i < end; ++i)
            scratch.emplace_back(inputs(indices[i], feat), targets[indices[i]]);
        std::sort(scratch.begin(), scratch.end());
        const int count = end - begin;
        double total = 0.0;
        for (auto& [v, t] : scratch) total += t;
        double left_sum = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        bool found = false;
        for (int i = 0; i + 1 < count; ++i) {
            left_sum += scratch[i].second;
            const int n_left = i + 1, n_right = count - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;
            if (scratch[i].first == scratch[i + 1].first) continue;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
            if (gain > best) {
                best = gain;
                *threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
                found = true;
            }
        }
        *score = best;
        return found;
    }

    void build(int node, int begin, int end) {
        const int count = end - begin;
        double mean = 0.0;
        for (int i = begin; i < end; ++i) mean += targets[indices[i]];
        mean /= count;
        tree.value[node] = mean;
        if (count < 2 * min_leaf) return;

        // sample mtry candidate features without replacement
        const int p = static_cast<int>(inputs.cols());
        for (int j = 0; j < mtry; ++j) {
            const int pick = j + static_cast<int>(rng.uniform_int(p - j));
            std::swap(feature_pool[j], feature_pool[pick]);
        }

        int best_feature = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        double best_threshold = 0.0;
        for (int j = 0; j < mtry; ++j) {
            double score, threshold;
            if (best_split(feature_pool[j], begin, end, &score, &threshold) &&
                score > best_score) {
                best_score = score;
                best_feature = feature_pool[j];
                best_threshold = threshold;
            }
        }
        if (best_feature < 0) return;

        auto mid_it = std::partition(indices.begin() + begin, indices.begin() + end, [&](int i) {
            return inputs(i, best_feature) <= best_threshold;
        });
        const int mid = static_cast<int>(mid_it - indices.begin());
        if (mid == begin || mid == end) return;

        tree.feature[node] = best_feature;
        tree.threshold[node] = best_threshold;
        const int left_node = make_node();
        const int right_node = make_node();
        tree.left[node] = left_node;
        tree.right[node] = right_node;
        build(left_node, begin, mid);
        build(right_node, mid, end);
    }
};

RegressionTree grow_tree(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                         const ForestOptions& options, int mtry, Rng& rng) {
    const int n = static_cast<int>(inputs.rows());
    RegressionTree tree;
    tree.in_bag.assign(n, 0);
    std::vector<int> indices(n);
    for (int i = 0; i < n; ++i) {
        const int pick = static_cast<int>(rng.uniform_int(n));
        indices[i] = pick;
        tree.in_bag[pick] = 1;
    }
    TreeBuilder builder{inputs, targets, options.min_leaf, mtry, rng, tree, indices};
    builder.feature_pool.resize(inputs.cols());
    std::iota(builder.feature_pool.begin(), builder.feature_pool.end(), 0);
    const int root = builder.make_node();
    builder.build(root, 0, n);
    return tree;
}

}  // namespace
}  // namespace detail

Eigen::VectorXd MeanModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != n_inputs_) throw std::invalid_argument("MeanModel::predict: dimension mismatch");
    switch (kind_) {
        case MeanModelKind::constant: return constant_mean_;
        case MeanModelKind::linear: {
            Eigen::VectorXd design(n_inputs_ + 1);
            design[0] = 1.0;
            design.tail(n_inputs_) = x;
            return linear_coef_.transpose() * design;
        }
        case MeanModelKind::forest: {
            Eigen::VectorXd out(n_outputs_);
            for (int col = 0; col < n_outputs_; ++col) {
                double sum = 0.0;
                for (const auto& tree : forests_[col]) sum += tree.predict(x);
                out[col] = sum / static_cast<double>(forests_[col].size());
            }
            return out;
        }
    }
    throw std::logic_error("MeanModel::predict: unknown kind");
}

MeanModel fit_conditional_mean(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               MeanModelKind kind, const ForestOptions& options,
                               std::uint64_t seed) {
    const int n = static_cast<int>(targets.rows());
    if (n < 2) throw std::invalid_argument("fit_conditional_mean: need at least 2 rows");
    if (inputs.rows() != n && inputs.cols() > 0)
        throw std::invalid_argument("fit_conditional_mean: row mismatch");

    MeanModel model;
    model.n_inputs_ = static_cast<int>(inputs.cols());
    model.n_outputs_ = static_cast<int>(targets.cols());

    if (inputs.cols() == 0) kind = MeanModelKind::constant;  // empty conditioning set
    model.kind_ = kind;

    switch (kind) {
        case MeanModelKind::constant: {
            model.constant_mean_ = targets.colwise().mean();
            model.training_predictions_ = model.constant_mean_.transpose().replicate(n, 1);
            break;
        }
        case MeanModelKind::linear: {
            Eigen::MatrixXd design(n, inputs.cols() + 1);
            design.col(0).setOnes();
            design.rightCols(inputs.cols()) = inputs;
            model.linear_coef_ = design.colPivHouseholderQr().solve(targets);
            model.training_predictions_ = design * model.linear_coef_;
            break;
        }
        case MeanModelKind::forest: {
            const int mtry = options.mtry > 0
                                 ? std::min<int>(options.mtry, inputs.cols())
                                 : std::max(1, static_cast<int>(inputs.cols()) / 3);
            model.forests_.resize(targets.cols());
            model.training_predictions_.resize(n, targets.cols());
            for (int col = 0; col < targets.cols(); ++col) {
                const Eigen::VectorXd y = targets.col(col);
                auto& forest = model.forests_[col];
                forest.reserve(options.n_trees);
                Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
                Eigen::VectorXi oob_count = Eigen::VectorXi::Zero(n);
                for (int t = 0; t < options.n_trees; ++t) {
                    Rng tree_rng(derive_seed(seed, static_cast<std::uint64_t>(col) * 1000003u + t));
                    forest.push_back(detail::grow_tree(inputs, y, options, mtry, tree_rng));
                    const auto& tree = forest.back();
                    if (!options.out_of_bag) continue;
                    for (int i = 0; i < n; ++i) {
                        if (tree.in_bag[i]) continue;
                        oob_sum[i] += tree.predict(inputs.row(i));
                        oob_count[i] += 1;
                    }
                }
                for (int i = 0; i < n; ++i) {
                    if (options.out_of_bag && oob_count[i] > 0) {
                        model.training_predictions_(i, col) = oob_sum[i] / oob_count[i];
                    } else {
                        double sum = 0.0;
                        for (const auto& tree : forest) sum += tree.predict(inputs.row(i));
                        model.training_predictions_(i, col) = sum / forest.size();
                    }
                }
            }
            break;
        }
    }
    return model;
}

MeanModelKind mean_model_kind_from_token(std::string_view token) {
    if (token == "forest") return MeanModelKind::forest;
    if (token == "linear") return MeanModelKind::linear;
    if (token == "mean") return MeanModelKind::constant;
    throw std::invalid_argument("unknown conditional-mean token: " + std::string(token));
}

}  // namespace tramicp
