#include <cmath>
#include <limits>

#include "doctest.h"

#include "bde/errors.hpp"
#include "bde/rng.hpp"
#include "bde/sampler.hpp"

using namespace bde;

namespace {

Target standard_normal_target() {
    return Target{
        .log_density = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); },
        .grad_log_density = [](const Eigen::VectorXd& x) { return (-x).eval(); },
    };
}

Target quadratic_target(const Eigen::VectorXd& scales) {
    return Target{
        .log_density =
            [scales](const Eigen::VectorXd& x) {
                return -0.5 * (scales.array() * x.array().square()).sum();
            },
        .grad_log_density =
            [scales](const Eigen::VectorXd& x) {
                return (-(scales.array() * x.array())).matrix().eval();
            },
    };
}

}  // namespace

TEST_CASE("momentum aligned with -g is a fixed direction with deltaK = (d-1) delta") {
    const int d = 4;
    Eigen::VectorXd g(d);
    g << -2.0, 0.0, 0.0, 0.0;  // e = -g/|g| = e1
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    u[0] = 1.0;
    const double eps = 0.3;
    const auto [u2, dk] = isokinetic_momentum_update(u, g, eps, d);
    CHECK((u2 - u).norm() < 1e-14);
    const double delta = eps * g.norm() / double(d - 1);
    CHECK(dk == doctest::Approx(double(d - 1) * delta).epsilon(1e-12));
}

TEST_CASE("momentum perpendicular to e keeps unit norm exactly") {
    const int d = 3;
    Eigen::VectorXd g(d);
    g << 0.0, -1.7, 0.0;  // e = e2
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    u[0] = 1.0;  // u perpendicular to e
    const auto [u2, dk] = isokinetic_momentum_update(u, g, 0.25, d);
    CHECK(std::abs(u2.norm() - 1.0) < 1e-14);
    CHECK(dk > 0.0);  // a = 0: deltaK = (d-1) ln cosh >= 0
}

TEST_CASE("momentum update matches a direct numerical evaluation (d=3)") {
    // delta = 0.1, a = 0.5
    const int d = 3;
    const double delta = 0.1, a = 0.5;
    Eigen::VectorXd e(d), u(d);
    e << 1.0, 0.0, 0.0;
    u << a, std::sqrt(1.0 - a * a), 0.0;
    const double gnorm = 1.3;
    const Eigen::VectorXd g = -gnorm * e;
    const double eps = delta * double(d - 1) / gnorm;

    const auto [u2, dk] = isokinetic_momentum_update(u, g, eps, d);

    // hand evaluation of the hyperbolic forms
    const double ch = std::cosh(delta), sh = std::sinh(delta);
    const Eigen::VectorXd u_expect = (u + e * (sh + a * (ch - 1.0))) / (ch + a * sh);
    const double dk_expect = double(d - 1) * std::log(ch + a * sh);
    CHECK((u2 - u_expect).norm() < 1e-14);
    CHECK(dk == doctest::Approx(dk_expect).epsilon(1e-13));
}

TEST_CASE("norm identity holds to 1e-12 over the (a, delta) grid") {
    const int d = 3;
    Eigen::VectorXd e(d), perp(d);
    e << 1.0, 0.0, 0.0;
    perp << 0.0, 1.0, 0.0;
    for (double a = -1.0; a <= 1.0 + 1e-12; a += 0.125) {
        for (double delta : {0.0, 1e-3, 0.05, 0.3, 1.0, 3.0, 10.0, 40.0}) {
            const Eigen::VectorXd u = a * e + std::sqrt(std::max(0.0, 1.0 - a * a)) * perp;
            const double gnorm = 2.0;
            const double eps = delta * double(d - 1) / gnorm;
            const auto [u2, dk] = isokinetic_momentum_update(u, -gnorm * e, eps, d);
            CHECK(std::abs(u2.norm() - 1.0) < 1e-12);
            if (a > 0.0 && delta > 0.0) CHECK(dk > 0.0);
            if (a == 0.0)
                CHECK(dk == doctest::Approx(double(d - 1) * std::log(std::cosh(delta)))
                                .epsilon(1e-12));
        }
    }
}

TEST_CASE("zero gradient is a degenerate signal, d<2 a config error") {
    Eigen::VectorXd u(2);
    u << 1.0, 0.0;
    const auto [u2, dk] = isokinetic_momentum_update(u, Eigen::VectorXd::Zero(2), 0.1, 2);
    CHECK(u2 == u);
    CHECK(dk == 0.0);
    CHECK_THROWS_AS(isokinetic_momentum_update(u, u, 0.1, 1), ConfigError);
}

TEST_CASE("position update composes linearly") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd u(3);
    u << 1.0, 0.0, 0.0;

    CHECK(position_update(theta, u, 0.7, 0.0) == theta);

    const Eigen::VectorXd two_half =
        position_update(position_update(theta, u, 0.4, 0.5), u, 0.4, 0.5);
    CHECK((two_half - position_update(theta, u, 0.4, 1.0)).norm() < 1e-15);

    const Eigen::VectorXd moved = position_update(theta, u, 0.2, 0.5);
    CHECK(moved[0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("partial refresh: nu formula, unit norm, no-op at L = infinity") {
    CHECK(refresh_noise_scale(0.5, 1.0) ==
          doctest::Approx(std::sqrt(std::exp(1.0) - 1.0)).epsilon(1e-12));

    PhiloxRng rng(3, 14);
    Eigen::VectorXd u = rng.normal_vector(6);
    u /= u.norm();

    const Eigen::VectorXd same =
        partial_refresh(u, 0.3, std::numeric_limits<double>::infinity(), rng);
    CHECK(same == u);

    for (int i = 0; i < 100; ++i) {
        u = partial_refresh(u, 0.3, 1.5, rng);
        CHECK(std::abs(u.norm() - 1.0) < 1e-12);
    }
}

namespace {

SamplerState make_state(const Eigen::VectorXd& theta, double eps, double L,
                        std::uint64_t seed, const Target& target) {
    SamplerState state{
        .theta = theta,
        .u = Eigen::VectorXd(),
        .eps = eps,
        .L = L,
        .potential = -target.log_density(theta),
        .rng = PhiloxRng(seed, RngStream::chain),
        .energy = {},
        .energy_var_ema = 0.0,
    };
    Eigen::VectorXd z = state.rng.normal_vector(theta.size());
    state.u = z / z.norm();
    return state;
}

}  // namespace

TEST_CASE("mclmc_step: deltaE vanishes as eps -> 0") {
    const Target target = standard_normal_target();
    Eigen::VectorXd theta(2);
    theta << 1.0, 0.5;
    double prev = 1e300;
    for (double eps : {0.1, 0.01, 0.001}) {
        SamplerState s = make_state(theta, eps, 1e6, 5, target);
        const double de = std::abs(mclmc_step(s, target));
        CHECK(de < prev);
        CHECK((s.theta - theta).norm() < 2.0 * eps);
        prev = de;
    }
    CHECK(prev < 1e-8);
}

TEST_CASE("mclmc_step trajectories are deterministic per seed") {
    const Target target = standard_normal_target();
    Eigen::VectorXd theta(3);
    theta << 0.4, -0.2, 1.0;
    SamplerState a = make_state(theta, 0.5, 2.0, 77, target);
    SamplerState b = make_state(theta, 0.5, 2.0, 77, target);
    for (int k = 0; k < 50; ++k) {
        const double da = mclmc_step(a, target);
        const double db = mclmc_step(b, target);
        CHECK(da == db);
    }
    CHECK(a.theta == b.theta);
    CHECK(a.u == b.u);
}

TEST_CASE("unit momentum norm survives 10^4 composed steps") {
    const Target target = standard_normal_target();
    PhiloxRng init(1, 2);
    SamplerState s = make_state(init.normal_vector(8), 0.8, 3.0, 13, target);
    for (int k = 0; k < 10000; ++k) {
        mclmc_step(s, target);
        CHECK(std::abs(s.u.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("accumulated energy error scales as eps^2 on a quadratic (refresh off)") {
    Eigen::VectorXd scales(2);
    scales << 1.0, 1.0;
    const Target target = quadratic_target(scales);
    Eigen::VectorXd theta(2);
    theta << 1.0, 0.3;

    const double T = 40.0;  // fixed integration time
    std::vector<double> log_eps, log_err;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
        SamplerState s =
            make_state(theta, eps, std::numeric_limits<double>::infinity(), 3, target);
        double acc = 0.0, max_acc = 0.0;
        const long steps = std::lround(T / eps);
        for (long k = 0; k < steps; ++k) {
            acc += mclmc_step(s, target);
            max_acc = std::max(max_acc, std::abs(acc));
        }
        log_eps.push_back(std::log(eps));
        log_err.push_back(std::log(max_acc));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
        mx += log_eps[i];
        my += log_err[i];
    }
    mx /= double(log_eps.size());
    my /= double(log_err.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
        num += (log_eps[i] - mx) * (log_err[i] - my);
        den += (log_eps[i] - mx) * (log_eps[i] - mx);
    }
    const double slope = num / den;
    CHECK(slope > 1.8);
    CHECK(slope < 2.2);
}

TEST_CASE("step_size_update: matched target is a fixed point") {
    CHECK(step_size_update(0.37, 0.2, 0.2) == 0.37);
    CHECK(step_size_update(1.0, 0.1, 1e4) == 0.5);   // clamped shrink
    CHECK(step_size_update(1.0, 1e4, 0.1) == 2.0);   // clamped growth
}

TEST_CASE("schedule midpoint target interpolates linearly") {
    // start 0.5, end 0.1, halfway through the schedule -> 0.3
    const double start = 0.5, end = 0.1;
    CHECK(start + (end - start) * 0.5 == doctest::Approx(0.3));
}

TEST_CASE("tuning tracks the end target on an isotropic gaussian, d=50") {
    const int d = 50;
    const Target target = standard_normal_target();
    SamplerConfig cfg;
    cfg.warmup_steps = 2000;
    cfg.n_samples = 2000;
    cfg.n_thinning = 1;
    cfg.energy_var_start = 0.5;
    cfg.energy_var_end = 1e-3;

    const ChainResult result =
        sample_chain(Eigen::VectorXd::Zero(d), cfg, target, 20250801);
    const double realized = result.sampling_energy.mean_square() / double(d);
    CHECK(realized > 0.7 * cfg.energy_var_end);
    CHECK(realized < 1.3 * cfg.energy_var_end);
}

TEST_CASE("sample accounting: floor(n_samples / n_thinning) retained") {
    const Target target = standard_normal_target();
    SamplerConfig cfg;
    cfg.warmup_steps = 50;
    cfg.n_samples = 200;
    cfg.n_thinning = 10;
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(4);

    CHECK(sample_chain(theta0, cfg, target, 1).samples.size() == 20);

    cfg.n_thinning = 1;
    CHECK(sample_chain(theta0, cfg, target, 1).samples.size() == 200);

    cfg.n_samples = 205;
    cfg.n_thinning = 10;
    CHECK(sample_chain(theta0, cfg, target, 1).samples.size() == 20);
}

TEST_CASE("chains are bit-identical for identical (theta, cfg, seed)") {
    const Target target = standard_normal_target();
    SamplerConfig cfg;
    cfg.warmup_steps = 200;
    cfg.n_samples = 100;
    cfg.n_thinning = 5;
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Ones(6);

    const ChainResult a = sample_chain(theta0, cfg, target, 5150);
    const ChainResult b = sample_chain(theta0, cfg, target, 5150);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
    CHECK(a.final_eps == b.final_eps);
    CHECK(a.final_L == b.final_L);

    const ChainResult c = sample_chain(theta0, cfg, target, 5151);
    CHECK(a.samples[0] != c.samples[0]);
}

TEST_CASE("standard normal moments, d=10, 5000 retained samples") {
    const int d = 10;
    const Target target = standard_normal_target();
    SamplerConfig cfg;
    cfg.warmup_steps = 2000;
    cfg.n_samples = 10000;
    cfg.n_thinning = 2;
    cfg.energy_var_start = 0.5;
    cfg.energy_var_end = 1e-3;

    const ChainResult result = sample_chain(Eigen::VectorXd::Zero(d), cfg, target, 99);
    REQUIRE(result.samples.size() == 5000);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : result.samples) mean += s;
    mean /= double(result.samples.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& s : result.samples) var += (s - mean).array().square().matrix();
    var /= double(result.samples.size());

    for (int j = 0; j < d; ++j) {
        CHECK(std::abs(mean[j]) < 0.1);
        CHECK(var[j] > 0.85);
        CHECK(var[j] < 1.15);
    }
}

TEST_CASE("a pathologically stiff target diverges fatally after one restart") {
    Eigen::VectorXd scales = Eigen::VectorXd::Constant(2, 1e14);
    const Target target = quadratic_target(scales);
    SamplerConfig cfg;
    cfg.warmup_steps = 100;
    cfg.n_samples = 10;
    cfg.n_thinning = 1;
    cfg.initial_step_size = 1e4;
    Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(2, 100.0);
    CHECK_THROWS_AS(sample_chain(theta0, cfg, target, 3), DivergenceError);
}

TEST_CASE("invalid sampler configs are rejected") {
    SamplerConfig cfg;
    cfg.n_thinning = 0;
    CHECK_THROWS_AS(validate_sampler(cfg), ConfigError);
    cfg = {};
    cfg.energy_var_end = 0.0;
    CHECK_THROWS_AS(validate_sampler(cfg), ConfigError);
    cfg = {};
    cfg.warmup_steps = -1;
    CHECK_THROWS_AS(validate_sampler(cfg), ConfigError);
}
