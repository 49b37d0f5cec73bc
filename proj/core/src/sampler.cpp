#include "bde/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bde/errors.hpp"

namespace bde {

namespace {

constexpr double kEmaSmoothing = 0.9;
constexpr long kUpdateCadence = 10;
/// Local exponent of EEVPD vs eps for this integrator on smooth targets;
/// used for the single landing correction at the end of warmup.
constexpr double kLandingExponent = 5.5;

double auto_initial_eps(Eigen::Index d) {
    return 0.2 * std::pow(double(d), 0.25);
}

double live_L(const SamplerConfig& cfg, Eigen::Index d, double eps) {
    return cfg.decoherence_length > 0.0 ? cfg.decoherence_length
                                        : std::sqrt(double(d)) * eps;
}

}  // namespace

void validate_sampler(const SamplerConfig& cfg) {
    if (cfg.warmup_steps < 0) throw ConfigError("warmup_steps must be nonnegative");
    if (cfg.n_samples < 1) throw ConfigError("n_samples must be positive");
    if (cfg.n_thinning < 1) throw ConfigError("n_thinning must be >= 1");
    if (cfg.energy_var_start <= 0.0 || cfg.energy_var_end <= 0.0)
        throw ConfigError("desired energy variances must be positive");
    if (cfg.initial_step_size < 0.0) throw ConfigError("initial_step_size must be positive or 0 (auto)");
    if (cfg.decoherence_length < 0.0) throw ConfigError("decoherence length must be positive or 0 (auto)");
    if (cfg.prior.prior_std <= 0.0) throw ConfigError("prior_std must be positive");
}

std::pair<Eigen::VectorXd, double> isokinetic_momentum_update(
    const Eigen::VectorXd& u, const Eigen::VectorXd& grad_neg_logp, double eps, int d) {
    if (d < 2) throw ConfigError("isokinetic dynamics needs dimension >= 2");
    if (!grad_neg_logp.allFinite())
        throw NumericError("non-finite gradient in momentum update");
    const double gnorm = grad_neg_logp.norm();
    if (gnorm == 0.0) return {u, 0.0};  // degenerate gradient: free drift

    const Eigen::VectorXd e = -grad_neg_logp / gnorm;
    const double delta = eps * gnorm / double(d - 1);
    const double a = u.dot(e);
    // Evaluated via q = exp(-delta) so large delta cannot overflow, and with
    // u split into its e-component and perpendicular remainder so the
    // e-coefficients combine analytically (no cancellation near u = -e):
    //   cosh d + a sinh d = e^d ((1+a) + (1-a) q^2) / 2
    //   u' proportional to ((1+a) - (1-a) q^2) e + 2 q (u - a e)
    const double q = std::exp(-delta);
    const double denom = (1.0 + a) + (1.0 - a) * q * q;
    const Eigen::VectorXd perp = u - a * e;
    Eigen::VectorXd numerator = ((1.0 + a) - (1.0 - a) * q * q) * e + 2.0 * q * perp;
    const double delta_k = double(d - 1) * (delta - std::log(2.0) + std::log(denom));
    const double nnorm = numerator.norm();
    if (nnorm == 0.0) return {u, delta_k};  // exactly antipodal: unstable equilibrium
    return {Eigen::VectorXd(numerator / nnorm), delta_k};
}

Eigen::VectorXd position_update(const Eigen::VectorXd& theta, const Eigen::VectorXd& u,
                                double eps, double fraction) {
    return theta + (fraction * eps) * u;
}

double refresh_noise_scale(double eps, double L) {
    return std::sqrt(std::expm1(2.0 * eps / L));
}

double step_size_update(double eps, double target, double vhat) {
    const double proposal = eps * std::pow(target / std::max(vhat, 1e-300), 0.25);
    return std::clamp(proposal, eps / 2.0, eps * 2.0);
}

Eigen::VectorXd partial_refresh(const Eigen::VectorXd& u, double eps, double L,
                                PhiloxRng& rng) {
    const double nu = refresh_noise_scale(eps, L);
    if (nu == 0.0) return u;
    const Eigen::VectorXd mixed = u + nu * rng.normal_vector(u.size());
    return mixed / mixed.norm();
}

double mclmc_step(SamplerState& state, const Target& target) {
    const int d = int(state.theta.size());
    const Eigen::VectorXd theta_mid = position_update(state.theta, state.u, state.eps, 0.5);
    const Eigen::VectorXd grad_u = -target.grad_log_density(theta_mid);
    auto [u_next, delta_k] = isokinetic_momentum_update(state.u, grad_u, state.eps, d);
    const Eigen::VectorXd theta_next = position_update(theta_mid, u_next, state.eps, 0.5);
    const double potential_next = -target.log_density(theta_next);
    const double delta_e = (potential_next - state.potential) + delta_k;

    state.theta = theta_next;
    state.u = partial_refresh(u_next, state.eps, state.L, state.rng);
    state.potential = potential_next;
    return delta_e;
}

namespace {

bool diverged(double delta_e) {
    return !std::isfinite(delta_e) || std::abs(delta_e) > kDivergenceThreshold;
}

/// One warmup pass. Returns false on divergence so the caller can restart.
bool warmup_pass(SamplerState& state, const SamplerConfig& cfg, const Target& target) {
    const Eigen::Index d = state.theta.size();
    const long warmup = cfg.warmup_steps;
    const long n_land = warmup / 4;       // frozen-eps landing window
    const long n_adapt = warmup - n_land;
    const Eigen::VectorXd theta_start = state.theta;

    double vhat = cfg.energy_var_start;
    for (long k = 1; k <= n_adapt; ++k) {
        state.L = live_L(cfg, d, state.eps);
        const double delta_e = mclmc_step(state, target);
        if (diverged(delta_e)) return false;
        const double obs = delta_e * delta_e / double(d);
        // Winsorized EMA: a single spike must not dominate the estimate.
        vhat = kEmaSmoothing * vhat + (1.0 - kEmaSmoothing) * std::min(obs, 10.0 * vhat);
        if (k % kUpdateCadence == 0) {
            const double target_var =
                cfg.energy_var_start +
                (cfg.energy_var_end - cfg.energy_var_start) * double(k) / double(n_adapt);
            state.eps = step_size_update(state.eps, target_var, vhat);
        }
    }

    double energy_sq_sum = 0.0;
    double displacement_sum = 0.0;
    for (long k = 0; k < n_land; ++k) {
        state.L = live_L(cfg, d, state.eps);
        const double delta_e = mclmc_step(state, target);
        if (diverged(delta_e)) return false;
        energy_sq_sum += delta_e * delta_e / double(d);
        displacement_sum += (state.theta - theta_start).norm();
    }

    if (n_land > 0) {
        const double measured = std::max(energy_sq_sum / double(n_land), 1e-300);
        const double proposal =
            state.eps * std::pow(cfg.energy_var_end / measured, 1.0 / kLandingExponent);
        state.eps = std::clamp(proposal, state.eps / 2.0, state.eps * 2.0);
        state.energy_var_ema = measured;
    } else {
        state.energy_var_ema = vhat;
    }

    if (cfg.decoherence_length > 0.0) {
        state.L = cfg.decoherence_length;
    } else if (n_land > 0) {
        const double mean_disp = 1.5 * displacement_sum / double(n_land);
        state.L = std::clamp(mean_disp, state.eps, 1e6 * state.eps);
    } else {
        state.L = std::sqrt(double(d)) * state.eps;
    }
    return true;
}

}  // namespace

int tune_step_size(SamplerState& state, const SamplerConfig& cfg, const Target& target) {
    if (cfg.warmup_steps < 1) throw ConfigError("tune_step_size needs warmup_steps >= 1");
    const SamplerState initial = state;
    if (warmup_pass(state, cfg, target)) return 0;

    // Single restart from the same theta with a tenth of the step size.
    state = initial;
    state.eps = initial.eps / 10.0;
    if (!warmup_pass(state, cfg, target))
        throw DivergenceError("sampler diverged twice during warmup");
    return 1;
}

ChainResult sample_chain(const ParameterVector& theta_map, const SamplerConfig& cfg,
                         const Target& target, std::uint64_t seed) {
    validate_sampler(cfg);
    const Eigen::Index d = theta_map.size();
    if (d < 2) throw ConfigError("sampling needs parameter dimension >= 2");

    SamplerState state{
        .theta = theta_map,
        .u = Eigen::VectorXd(),
        .eps = cfg.initial_step_size > 0.0 ? cfg.initial_step_size : auto_initial_eps(d),
        .L = 0.0,
        .potential = 0.0,
        .rng = PhiloxRng(seed, RngStream::chain),
        .energy = {},
        .energy_var_ema = cfg.energy_var_start,
    };
    const Eigen::VectorXd z = state.rng.normal_vector(d);
    state.u = z / z.norm();
    state.L = live_L(cfg, d, state.eps);
    state.potential = -target.log_density(theta_map);
    if (!std::isfinite(state.potential))
        throw NumericError("non-finite log density at the chain start");

    ChainResult result;
    if (cfg.warmup_steps > 0) result.divergence_restarts = tune_step_size(state, cfg, target);

    const long retained = cfg.n_samples / cfg.n_thinning;
    result.samples.reserve(std::size_t(retained));
    for (long k = 1; k <= cfg.n_samples; ++k) {
        const double delta_e = mclmc_step(state, target);
        if (diverged(delta_e))
            throw DivergenceError("sampler diverged at sampling step " + std::to_string(k));
        state.energy.add(delta_e);
        if (k % cfg.n_thinning == 0) result.samples.push_back(state.theta);
    }
    result.final_eps = state.eps;
    result.final_L = state.L;
    result.sampling_energy = state.energy;
    return result;
}

}  // namespace bde
