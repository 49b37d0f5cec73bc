#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bde/data.hpp"

namespace bde {

using ParameterVector = Eigen::VectorXd;

enum class Activation { relu, tanh };

/// Floor added to the softplus scale head so the predictive variance never
/// collapses and the log-likelihood stays smooth.
inline constexpr double kSigmaMin = 1e-3;

/// Feed-forward architecture plus task head. The flat parameter dimension is
/// derived from the fields alone; `hidden_layers` may be empty, which
/// degrades gracefully to a linear model.
struct NetworkConfig {
    int input_dim = 1;
    std::vector<int> hidden_layers = {16, 16};
    Activation activation = Activation::relu;
    Task task = Task::regression;
    /// Targets t for regression, class count k for classification.
    int head_dim = 1;

    /// 2t for regression (mean + raw scale per target), k for classification.
    int output_width() const {
        return task == Task::regression ? 2 * head_dim : head_dim;
    }
};

/// Throws ConfigError when a field violates its invariants.
void validate_network(const NetworkConfig& config);

/// d = sum over layers of (fan_in + 1) * fan_out.
int param_dim(const NetworkConfig& config);

/// Layer-wise weight init: He scaling for relu, Glorot for tanh, biases zero.
/// Deterministic in (config, seed).
ParameterVector init_params(const NetworkConfig& config, std::uint64_t seed);

/// Affine+activation chain; the last layer is affine with no activation.
Eigen::MatrixXd forward(const NetworkConfig& config, const ParameterVector& theta,
                        const Eigen::MatrixXd& X);

struct GaussianHead {
    Eigen::MatrixXd mu;     // n x t
    Eigen::MatrixXd sigma;  // n x t, entries >= sigma_min
};

/// mu = raw[:, :t]; sigma = softplus(raw[:, t:]) + sigma_min.
GaussianHead decode_gaussian_head(const Eigen::MatrixXd& raw, double sigma_min = kSigmaMin);

struct PriorSpec {
    double prior_std = 1.0;  ///< isotropic Gaussian prior over theta
};

/// Summed (not averaged) negative log-likelihood of the dataset.
double negative_log_likelihood(const NetworkConfig& config, const ParameterVector& theta,
                               const Dataset& data);

/// NLL and its exact gradient from one reverse pass. Shared by the
/// optimizer (mean NLL: divide by n) and the log-posterior gradient.
std::pair<double, ParameterVector> nll_value_and_grad(const NetworkConfig& config,
                                                      const ParameterVector& theta,
                                                      const Dataset& data);

/// Unnormalized: -NLL(theta) - ||theta||^2 / (2 prior_std^2).
double log_posterior(const NetworkConfig& config, const ParameterVector& theta,
                     const Dataset& data, const PriorSpec& prior);

ParameterVector grad_log_posterior(const NetworkConfig& config, const ParameterVector& theta,
                                   const Dataset& data, const PriorSpec& prior);

double softplus(double x);

}  // namespace bde
