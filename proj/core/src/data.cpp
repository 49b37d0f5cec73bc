#include "bde/data.hpp"

#include <cmath>
#include <string>

#include "bde/errors.hpp"

namespace bde {

void validate_dataset(const Dataset& data, int num_classes) {
    if (data.X.rows() < 1) throw DataError("dataset is empty");
    if (!data.X.allFinite()) throw DataError("dataset features contain non-finite values");
    if (data.task == Task::regression) {
        if (data.y.rows() != data.X.rows())
            throw ShapeError("feature/target row mismatch: " + std::to_string(data.X.rows()) +
                             " vs " + std::to_string(data.y.rows()));
        if (!data.y.allFinite()) throw DataError("dataset targets contain non-finite values");
    } else {
        if (static_cast<Eigen::Index>(data.labels.size()) != data.X.rows())
            throw ShapeError("feature/label row mismatch");
        for (std::size_t i = 0; i < data.labels.size(); ++i) {
            if (data.labels[i] < 0 || (num_classes > 0 && data.labels[i] >= num_classes))
                throw DataError("label out of range at row " + std::to_string(i));
        }
    }
}

namespace {

void column_stats(const Eigen::MatrixXd& M, Eigen::VectorXd& mean, Eigen::VectorXd& scale,
                  std::vector<int>& constants) {
    const Eigen::Index n = M.rows();
    mean = M.colwise().mean();
    scale.resize(M.cols());
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const double var = (M.col(j).array() - mean[j]).square().sum() / double(n);
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            scale[j] = sd;
        } else {
            scale[j] = 1.0;
            constants.push_back(int(j));
        }
    }
}

}  // namespace

StandardizationStats fit_standardizer(const Dataset& train) {
    if (train.n() < 1) throw DataError("cannot fit standardizer on empty dataset");
    StandardizationStats stats;
    column_stats(train.X, stats.x_mean, stats.x_scale, stats.constant_features);
    if (train.task == Task::regression) {
        column_stats(train.y, stats.y_mean, stats.y_scale, stats.constant_targets);
    }
    return stats;
}

Eigen::MatrixXd standardize_features(const StandardizationStats& stats,
                                     const Eigen::MatrixXd& X) {
    if (X.cols() != stats.x_mean.size())
        throw ShapeError("feature count " + std::to_string(X.cols()) +
                         " does not match standardizer width " +
                         std::to_string(stats.x_mean.size()));
    return (X.rowwise() - stats.x_mean.transpose()).array().rowwise() /
           stats.x_scale.transpose().array();
}

Dataset apply_standardizer(const StandardizationStats& stats, const Dataset& data) {
    Dataset out = data;
    out.X = standardize_features(stats, data.X);
    if (data.task == Task::regression) {
        if (data.y.cols() != stats.y_mean.size())
            throw ShapeError("target count does not match standardizer");
        out.y = (data.y.rowwise() - stats.y_mean.transpose()).array().rowwise() /
                stats.y_scale.transpose().array();
    }
    return out;
}

Eigen::MatrixXd destandardize_targets(const StandardizationStats& stats,
                                      const Eigen::MatrixXd& y_std) {
    if (y_std.cols() != stats.y_mean.size())
        throw ShapeError("target count does not match standardizer");
    return (y_std.array().rowwise() * stats.y_scale.transpose().array()).rowwise() +
           stats.y_mean.transpose().array();
}

}  // namespace bde
