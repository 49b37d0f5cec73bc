#pragma once

#include <vector>

#include <Eigen/Core>

namespace bde {

enum class Task { regression, classification };

/// Tabular dataset. For regression `y` is n x t; for classification the
/// integer labels in [0, k) live in `labels` and `y` stays empty.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd y;
    std::vector<int> labels;
    Task task = Task::regression;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index num_features() const { return X.cols(); }
};

/// Throws DataError / ShapeError when the dataset violates its invariants
/// (empty, non-finite entries, label out of range).
void validate_dataset(const Dataset& data, int num_classes = 0);

/// Per-feature and (regression only) per-target z-scoring statistics.
/// Constant columns keep scale 1 and are reported in `constant_features`
/// / `constant_targets` so callers can warn.
struct StandardizationStats {
    Eigen::VectorXd x_mean, x_scale;
    Eigen::VectorXd y_mean, y_scale;
    std::vector<int> constant_features;
    std::vector<int> constant_targets;
};

StandardizationStats fit_standardizer(const Dataset& train);

/// z-scores features (and targets for regression) with the given stats.
Dataset apply_standardizer(const StandardizationStats& stats, const Dataset& data);

Eigen::MatrixXd standardize_features(const StandardizationStats& stats,
                                     const Eigen::MatrixXd& X);

/// Maps standardized target values back to original units.
Eigen::MatrixXd destandardize_targets(const StandardizationStats& stats,
                                      const Eigen::MatrixXd& y_std);

}  // namespace bde
