#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bde/model.hpp"
#include "bde/rng.hpp"

namespace bde {

/// Differentiable sampling target: unnormalized log density and its gradient.
struct Target {
    std::function<double(const Eigen::VectorXd&)> log_density;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_density;
};

struct SamplerConfig {
    long warmup_steps = 5000;
    long n_samples = 200;   ///< post-warmup steps per member
    long n_thinning = 10;   ///< retain every n-th state
    double energy_var_start = 0.5;
    double energy_var_end = 0.1;
    double initial_step_size = 0.0;    ///< 0 = auto
    double decoherence_length = 0.0;   ///< 0 = auto (tuned after the step size)
    PriorSpec prior;
};

void validate_sampler(const SamplerConfig& cfg);

/// Per-step energy change beyond which a step counts as a divergence.
inline constexpr double kDivergenceThreshold = 1000.0;

/// Welford accumulator over the per-step energy changes.
struct EnergyStats {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / double(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 0 ? m2 / double(n) : 0.0; }
    /// E[(dE)^2] = Var + mean^2.
    double mean_square() const { return variance() + mean * mean; }
};

struct SamplerState {
    Eigen::VectorXd theta;
    Eigen::VectorXd u;       ///< unit momentum direction
    double eps = 0.0;        ///< step size
    double L = 0.0;          ///< decoherence length
    double potential = 0.0;  ///< cached U(theta) = -log_density(theta)
    PhiloxRng rng;
    EnergyStats energy;      ///< running stats of per-step energy change
    double energy_var_ema = 0.0;  ///< V-hat tracked during warmup
};

/// Exact isokinetic rotation of the unit momentum toward the negative
/// gradient direction, with delta = eps * ||g|| / (d - 1).
/// Returns the new unit direction and the kinetic energy change
/// deltaK = (d-1) * ln(cosh delta + <u,e> sinh delta).
/// A zero gradient is a degenerate signal: u is returned unchanged, deltaK 0.
std::pair<Eigen::VectorXd, double> isokinetic_momentum_update(
    const Eigen::VectorXd& u, const Eigen::VectorXd& grad_neg_logp, double eps, int d);

Eigen::VectorXd position_update(const Eigen::VectorXd& theta, const Eigen::VectorXd& u,
                                double eps, double fraction);

/// Noise strength of the partial momentum refresh.
double refresh_noise_scale(double eps, double L);

/// Quarter-power multiplicative step-size adaptation, clamped to a factor
/// of two per update. target == vhat is a fixed point.
double step_size_update(double eps, double target, double vhat);

/// u' = (u + nu z) / ||u + nu z|| with z standard normal, nu from eps/L.
Eigen::VectorXd partial_refresh(const Eigen::VectorXd& u, double eps, double L, PhiloxRng& rng);

/// One MCLMC step: position half-step, isokinetic momentum full step at the
/// midpoint, position half-step, then partial refresh. Returns
/// deltaE = U(theta') - U(theta) + deltaK (refresh excluded). A non-finite or
/// > kDivergenceThreshold return signals divergence; the caller decides.
double mclmc_step(SamplerState& state, const Target& target);

/// Adapts eps so the per-dimension energy variance (deltaE)^2/d follows the
/// linear start->end schedule, then picks L from the mean displacement over
/// the last quarter of warmup (when L is auto). Returns the number of
/// divergence restarts (0 or 1); throws DivergenceError when the single
/// eps/10 restart also diverges.
int tune_step_size(SamplerState& state, const SamplerConfig& cfg, const Target& target);

struct ChainResult {
    std::vector<Eigen::VectorXd> samples;
    double final_eps = 0.0;
    double final_L = 0.0;
    int divergence_restarts = 0;
    EnergyStats sampling_energy;  ///< stats over the post-warmup phase
};

/// Full single-chain pipeline: unit-sphere momentum init, warmup tuning,
/// then n_samples steps retaining every n_thinning-th state
/// (floor(n_samples / n_thinning) samples total).
ChainResult sample_chain(const ParameterVector& theta_map, const SamplerConfig& cfg,
                         const Target& target, std::uint64_t seed);

}  // namespace bde
