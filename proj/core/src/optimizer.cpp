#include "bde/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bde/errors.hpp"
#include "bde/rng.hpp"

namespace bde {

void validate_optimizer(const OptimizerConfig& cfg) {
    if (cfg.lr <= 0.0) throw ConfigError("lr must be positive");
    if (cfg.weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
    if (cfg.epochs < 1) throw ConfigError("epochs must be positive");
    if (cfg.patience < 1) throw ConfigError("patience must be positive");
    if (cfg.patience > cfg.epochs) throw ConfigError("patience must not exceed epochs");
    if (cfg.validation_split < 0.0 || cfg.validation_split >= 1.0)
        throw ConfigError("validation_split must lie in [0, 1)");
    if (cfg.beta1 <= 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 <= 0.0 || cfg.beta2 >= 1.0)
        throw ConfigError("beta1/beta2 must lie in (0, 1)");
    if (cfg.eps <= 0.0) throw ConfigError("eps must be positive");
    if (cfg.batch_size < 0) throw ConfigError("batch_size must be positive or 0 (full)");
}

void adamw_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamWState& state,
                const OptimizerConfig& cfg) {
    if (theta.size() != grad.size() || theta.size() != state.m.size())
        throw ShapeError("adamw_step length mismatch");
    if (!grad.allFinite()) throw NumericError("non-finite gradient in adamw_step");

    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.array().square().matrix();
    ++state.step_count;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step_count));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step_count));
    theta -= cfg.lr * ((state.m / c1).array() / ((state.v / c2).array().sqrt() + cfg.eps) +
                       cfg.weight_decay * theta.array())
                         .matrix();
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
    Dataset out;
    out.task = data.task;
    out.X.resize(Eigen::Index(rows.size()), data.X.cols());
    if (data.task == Task::regression) out.y.resize(Eigen::Index(rows.size()), data.y.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(Eigen::Index(i)) = data.X.row(rows[i]);
        if (data.task == Task::regression)
            out.y.row(Eigen::Index(i)) = data.y.row(rows[i]);
        else
            out.labels.push_back(data.labels[std::size_t(rows[i])]);
    }
    return out;
}

void fisher_yates(std::vector<Eigen::Index>& idx, PhiloxRng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = std::size_t(rng.uniform_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

std::pair<Dataset, Dataset> split_train_validation(const Dataset& data, double fraction,
                                                   std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw ConfigError("validation fraction must lie in [0, 1)");
    const Eigen::Index n = data.n();
    const Eigen::Index n_valid = Eigen::Index(std::ceil(double(n) * fraction));
    if (n - n_valid < 1) throw ConfigError("split leaves no training rows");

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index(0));
    PhiloxRng rng(seed, RngStream::data_split);
    fisher_yates(idx, rng);

    const std::vector<Eigen::Index> valid_rows(idx.begin(), idx.begin() + n_valid);
    const std::vector<Eigen::Index> train_rows(idx.begin() + n_valid, idx.end());
    return {take_rows(data, train_rows), take_rows(data, valid_rows)};
}

TrainResult train_member(const Dataset& data, const NetworkConfig& net,
                         const OptimizerConfig& opt, std::uint64_t seed) {
    validate_network(net);
    validate_optimizer(opt);

    auto [train, valid] = split_train_validation(data, opt.validation_split, seed);
    const bool has_valid = valid.n() > 0;
    const Eigen::Index n_train = train.n();

    ParameterVector theta = init_params(net, seed);
    AdamWState state(theta.size());
    PhiloxRng shuffle_rng(seed, RngStream::batch_shuffle);

    const Eigen::Index batch =
        opt.batch_size > 0 ? std::min<Eigen::Index>(opt.batch_size, n_train) : n_train;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), Eigen::Index(0));

    TrainResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    long bad_epochs = 0;

    for (long epoch = 1; epoch <= opt.epochs; ++epoch) {
        if (batch == n_train) {
            auto [nll, grad] = nll_value_and_grad(net, theta, train);
            if (!std::isfinite(nll))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            adamw_step(theta, Eigen::VectorXd(grad / double(n_train)), state, opt);
        } else {
            fisher_yates(order, shuffle_rng);
            for (Eigen::Index pos = 0; pos < n_train; pos += batch) {
                const Eigen::Index len = std::min(batch, n_train - pos);
                const std::vector<Eigen::Index> rows(order.begin() + pos,
                                                     order.begin() + pos + len);
                const Dataset mini = take_rows(train, rows);
                auto [nll, grad] = nll_value_and_grad(net, theta, mini);
                if (!std::isfinite(nll))
                    throw NumericError("non-finite training loss at epoch " +
                                       std::to_string(epoch));
                adamw_step(theta, Eigen::VectorXd(grad / double(len)), state, opt);
            }
        }

        const double train_loss =
            negative_log_likelihood(net, theta, train) / double(n_train);
        const double monitored =
            has_valid ? negative_log_likelihood(net, theta, valid) / double(valid.n())
                      : train_loss;
        if (!std::isfinite(train_loss) || !std::isfinite(monitored))
            throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
        result.history.push_back({train_loss, monitored});

        const bool significant =
            !std::isfinite(result.best_loss) ||
            monitored < result.best_loss - kTrainRelTol * std::abs(result.best_loss);
        if (monitored < result.best_loss) {
            result.best_loss = monitored;
            result.theta_map = theta;
        }
        if (has_valid) {
            if (significant)
                bad_epochs = 0;
            else
                ++bad_epochs;
            if (bad_epochs >= opt.patience) break;
        }
    }
    return result;
}

}  // namespace bde
