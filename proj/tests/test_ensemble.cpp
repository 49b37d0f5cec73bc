#include <cmath>
#include <string>

#include "doctest.h"

#include "bde/ensemble.hpp"
#include "bde/errors.hpp"
#include "bde/rng.hpp"

using namespace bde;

namespace {

Dataset toy_data(Eigen::Index n, std::uint64_t seed) {
    PhiloxRng rng(seed, 50);
    Dataset data;
    data.task = Task::regression;
    data.X = Eigen::MatrixXd::NullaryExpr(n, 2, [&] { return rng.normal(); });
    data.y = (data.X * Eigen::Vector2d(1.0, -0.5)).array() + 0.2;
    data.y += Eigen::MatrixXd::NullaryExpr(n, 1, [&] { return 0.1 * rng.normal(); });
    return data;
}

EnsembleConfig quick_config(int members) {
    EnsembleConfig cfg;
    cfg.n_members = members;
    cfg.net = NetworkConfig{.input_dim = 2, .hidden_layers = {4}, .head_dim = 1};
    cfg.opt.epochs = 30;
    cfg.opt.patience = 30;
    cfg.opt.lr = 0.05;
    cfg.sampler.warmup_steps = 120;
    cfg.sampler.n_samples = 40;
    cfg.sampler.n_thinning = 10;
    cfg.master_seed = 424242;
    return cfg;
}

}  // namespace

TEST_CASE("sample accounting: 8 members x 200/10 = 160 rows") {
    EnsembleConfig cfg = quick_config(8);
    cfg.sampler.n_samples = 200;
    cfg.sampler.n_thinning = 10;
    const PosteriorEnsemble ens = fit(toy_data(40, 1), cfg);
    CHECK(ens.num_samples() == 160);
    CHECK(ens.samples.cols() == param_dim(cfg.net));
    CHECK(ens.members.size() == 8);
    CHECK(ens.samples.allFinite());
}

TEST_CASE("single member fit equals the direct pipeline composition") {
    const Dataset data = toy_data(36, 2);
    EnsembleConfig cfg = quick_config(1);
    const PosteriorEnsemble ens = fit(data, cfg);

    const std::uint64_t seed = derive_member_seed(cfg.master_seed, 0);
    const StandardizationStats stats = fit_standardizer(data);
    const Dataset standardized = apply_standardizer(stats, data);
    const TrainResult trained = train_member(standardized, cfg.net, cfg.opt, seed);
    const Target target = make_posterior_target(cfg.net, standardized, cfg.sampler.prior);
    const ChainResult chain = sample_chain(trained.theta_map, cfg.sampler, target, seed);

    REQUIRE(ens.num_samples() == Eigen::Index(chain.samples.size()));
    for (Eigen::Index s = 0; s < ens.num_samples(); ++s)
        CHECK(ens.samples.row(s).transpose() == chain.samples[std::size_t(s)]);
    CHECK(ens.members[0].seed == seed);
    CHECK(ens.members[0].final_eps == chain.final_eps);
}

TEST_CASE("worker count does not change a single bit of the samples") {
    const Dataset data = toy_data(36, 3);
    EnsembleConfig cfg = quick_config(4);

    cfg.max_workers = 1;
    const PosteriorEnsemble serial = fit(data, cfg);
    cfg.max_workers = 4;
    const PosteriorEnsemble parallel = fit(data, cfg);

    CHECK(serial.samples == parallel.samples);
    for (std::size_t m = 0; m < 4; ++m) {
        CHECK(serial.members[m].seed == parallel.members[m].seed);
        CHECK(serial.members[m].final_eps == parallel.members[m].final_eps);
        CHECK(serial.members[m].map_loss == parallel.members[m].map_loss);
    }
}

TEST_CASE("dropping the last member leaves earlier members untouched") {
    const Dataset data = toy_data(30, 4);
    const PosteriorEnsemble e3 = fit(data, quick_config(3));
    const PosteriorEnsemble e2 = fit(data, quick_config(2));

    const long per = quick_config(3).sampler.n_samples / quick_config(3).sampler.n_thinning;
    CHECK(e3.samples.topRows(2 * per) == e2.samples);
}

TEST_CASE("member failure aborts the fit naming the member") {
    const Dataset data = toy_data(30, 5);
    EnsembleConfig cfg = quick_config(2);
    cfg.sampler.initial_step_size = 1e12;  // guaranteed double divergence
    try {
        fit(data, cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("member") != std::string::npos);
    }
}

TEST_CASE("standardization stats live inside the ensemble") {
    const Dataset data = toy_data(64, 6);
    const PosteriorEnsemble ens = fit(data, quick_config(1));
    CHECK(ens.standardization.x_mean.size() == 2);
    CHECK(ens.standardization.y_mean.size() == 1);
    CHECK((ens.standardization.x_scale.array() > 0).all());

    const StandardizationStats direct = fit_standardizer(data);
    CHECK(ens.standardization.x_mean == direct.x_mean);
    CHECK(ens.standardization.y_scale == direct.y_scale);
}

TEST_CASE("config validation composes the per-module validators") {
    EnsembleConfig cfg = quick_config(1);
    cfg.n_members = 0;
    CHECK_THROWS_AS(validate_ensemble(cfg), ConfigError);

    cfg = quick_config(1);
    cfg.sampler.n_samples = 5;
    cfg.sampler.n_thinning = 10;  // retains zero samples
    CHECK_THROWS_AS(validate_ensemble(cfg), ConfigError);

    cfg = quick_config(1);
    cfg.opt.lr = -1.0;
    CHECK_THROWS_AS(validate_ensemble(cfg), ConfigError);
}

TEST_CASE("fit rejects data whose width disagrees with the network") {
    EnsembleConfig cfg = quick_config(1);
    cfg.net.input_dim = 5;
    CHECK_THROWS_AS(fit(toy_data(20, 7), cfg), ShapeError);
}
