#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bde/data.hpp"
#include "bde/model.hpp"

namespace bde {

struct OptimizerConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;  ///< decoupled, not part of the gradient
    long epochs = 1000;
    long patience = 20;
    double validation_split = 0.15;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long batch_size = 0;  ///< 0 = full batch
};

void validate_optimizer(const OptimizerConfig& cfg);

struct AdamWState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step_count = 0;

    explicit AdamWState(Eigen::Index d)
        : m(Eigen::VectorXd::Zero(d)), v(Eigen::VectorXd::Zero(d)) {}
};

/// One decoupled-weight-decay Adam update, in place:
///   m' = b1 m + (1-b1) g;  v' = b2 v + (1-b2) g^2
///   theta -= lr * ( mhat / (sqrt(vhat) + eps) + weight_decay * theta )
void adamw_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamWState& state,
                const OptimizerConfig& cfg);

/// Deterministic shuffled split; validation gets ceil(n * fraction) rows.
std::pair<Dataset, Dataset> split_train_validation(const Dataset& data, double fraction,
                                                   std::uint64_t seed);

struct EpochStats {
    double train_loss;  ///< mean NLL on the training split
    double valid_loss;  ///< mean NLL on the validation split (== train_loss if split is 0)
};

struct TrainResult {
    ParameterVector theta_map;
    std::vector<EpochStats> history;
    double best_loss;  ///< minimum monitored loss; equals the checkpoint's loss
};

/// Relative decrease required to reset the early-stopping patience counter.
inline constexpr double kTrainRelTol = 1e-6;

/// Stage-one MAP optimization: AdamW on the mean NLL with validation-split
/// early stopping and best-checkpoint restore. With validation_split = 0
/// early stopping is disabled and the training loss fills both history
/// columns. Deterministic in (data, configs, seed).
TrainResult train_member(const Dataset& data, const NetworkConfig& net,
                         const OptimizerConfig& opt, std::uint64_t seed);

}  // namespace bde
