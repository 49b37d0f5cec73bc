#include "bde/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <string>
#include <thread>

#include "bde/errors.hpp"
#include "bde/rng.hpp"

namespace bde {

void validate_ensemble(const EnsembleConfig& cfg) {
    if (cfg.n_members < 1) throw ConfigError("n_members must be >= 1");
    if (cfg.max_workers < 0) throw ConfigError("max_workers must be positive or 0 (auto)");
    validate_network(cfg.net);
    validate_optimizer(cfg.opt);
    validate_sampler(cfg.sampler);
    if (cfg.sampler.n_samples / cfg.sampler.n_thinning < 1)
        throw ConfigError("n_samples / n_thinning must retain at least one sample");
}

std::uint64_t derive_member_seed(std::uint64_t master_seed, int member_index) {
    // v1 scheme: golden-ratio stride into SplitMix64. Injective over member
    // indices for a fixed master seed.
    return mix64(master_seed + 0x9E3779B97F4A7C15ull * (std::uint64_t(member_index) + 1));
}

Target make_posterior_target(const NetworkConfig& net, const Dataset& standardized,
                             const PriorSpec& prior) {
    return Target{
        .log_density =
            [net, standardized, prior](const Eigen::VectorXd& theta) {
                return log_posterior(net, theta, standardized, prior);
            },
        .grad_log_density =
            [net, standardized, prior](const Eigen::VectorXd& theta) {
                return grad_log_posterior(net, theta, standardized, prior);
            },
    };
}

namespace {

int resolve_workers(int requested, int n_members) {
    const int hw = int(std::max(1u, std::thread::hardware_concurrency()));
    const int cap = requested > 0 ? requested : hw;
    return std::max(1, std::min(cap, n_members));
}

}  // namespace

PosteriorEnsemble fit(const Dataset& data, const EnsembleConfig& cfg) {
    validate_ensemble(cfg);
    validate_dataset(data, cfg.net.task == Task::classification ? cfg.net.head_dim : 0);
    if (data.num_features() != cfg.net.input_dim)
        throw ShapeError("dataset has " + std::to_string(data.num_features()) +
                         " features but the network expects " +
                         std::to_string(cfg.net.input_dim));

    PosteriorEnsemble ensemble;
    ensemble.config = cfg;
    ensemble.standardization = fit_standardizer(data);
    const Dataset standardized = apply_standardizer(ensemble.standardization, data);

    const long per_member = cfg.sampler.n_samples / cfg.sampler.n_thinning;
    const int d = param_dim(cfg.net);
    ensemble.samples.resize(Eigen::Index(cfg.n_members) * per_member, d);
    ensemble.members.resize(std::size_t(cfg.n_members));

    const Target target = make_posterior_target(cfg.net, standardized, cfg.sampler.prior);

    std::atomic<int> next_member{0};
    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errors(std::size_t(cfg.n_members));

    auto run_member = [&](int member) {
        const std::uint64_t seed = derive_member_seed(cfg.master_seed, member);
        const TrainResult trained = train_member(standardized, cfg.net, cfg.opt, seed);
        const ChainResult chain = sample_chain(trained.theta_map, cfg.sampler, target, seed);
        for (long s = 0; s < per_member; ++s)
            ensemble.samples.row(Eigen::Index(member) * per_member + s) =
                chain.samples[std::size_t(s)].transpose();
        ensemble.members[std::size_t(member)] = MemberMeta{
            .seed = seed,
            .final_eps = chain.final_eps,
            .final_L = chain.final_L,
            .map_loss = trained.best_loss,
            .divergences = chain.divergence_restarts,
        };
    };

    auto worker = [&] {
        for (;;) {
            const int member = next_member.fetch_add(1);
            if (member >= cfg.n_members || failed.load()) return;
            try {
                run_member(member);
            } catch (...) {
                errors[std::size_t(member)] = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const int n_workers = resolve_workers(cfg.max_workers, cfg.n_members);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(std::size_t(n_workers));
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (std::size_t m = 0; m < errors.size(); ++m) {
        if (!errors[m]) continue;
        const std::string where = "member " + std::to_string(m) + ": ";
        try {
            std::rethrow_exception(errors[m]);
        } catch (const DivergenceError& e) {
            throw DivergenceError(where + e.what());
        } catch (const NumericError& e) {
            throw NumericError(where + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        } catch (const std::exception& e) {
            throw Error(where + e.what());
        }
    }
    return ensemble;
}

}  // namespace bde
