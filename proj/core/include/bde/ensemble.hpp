#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bde/data.hpp"
#include "bde/model.hpp"
#include "bde/optimizer.hpp"
#include "bde/sampler.hpp"

namespace bde {

struct EnsembleConfig {
    int n_members = 8;
    NetworkConfig net;
    OptimizerConfig opt;
    SamplerConfig sampler;
    std::uint64_t master_seed = 0;
    int max_workers = 0;  ///< 0 = auto (min of n_members and available cores)
};

void validate_ensemble(const EnsembleConfig& cfg);

struct MemberMeta {
    std::uint64_t seed = 0;
    double final_eps = 0.0;
    double final_L = 0.0;
    double map_loss = 0.0;  ///< best monitored (validation) mean NLL
    int divergences = 0;
};

/// S x d matrix of retained posterior samples plus everything needed to
/// predict: architecture, standardization stats, per-member metadata.
/// Immutable after construction; safe to share across threads.
struct PosteriorEnsemble {
    Eigen::MatrixXd samples;  ///< rows are parameter vectors
    EnsembleConfig config;
    StandardizationStats standardization;
    std::vector<MemberMeta> members;

    Eigen::Index num_samples() const { return samples.rows(); }
    const NetworkConfig& net() const { return config.net; }
};

/// Stateless, versioned mixing of (master_seed, member_index).
std::uint64_t derive_member_seed(std::uint64_t master_seed, int member_index);

/// Runs n_members independent (init -> train -> tune -> sample) pipelines,
/// in parallel across up to max_workers threads, and concatenates retained
/// samples in member order. Standardization is fit on `data` and stored in
/// the result; members train and sample on the standardized view. The
/// samples matrix is a pure function of (data, cfg) - never of the worker
/// count or scheduling order. Any member failure aborts the whole fit.
PosteriorEnsemble fit(const Dataset& data, const EnsembleConfig& cfg);

/// Log-posterior target over standardized data, as handed to the sampler.
Target make_posterior_target(const NetworkConfig& net, const Dataset& standardized,
                             const PriorSpec& prior);

}  // namespace bde
