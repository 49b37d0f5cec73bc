#include "bde/model.hpp"

#include <cmath>
#include <string>

#include "bde/errors.hpp"
#include "bde/rng.hpp"

namespace bde {

namespace {

/// Weight-layer sizes in order: input -> hidden... -> output_width.
std::vector<std::pair<int, int>> layer_shapes(const NetworkConfig& config) {
    std::vector<std::pair<int, int>> shapes;
    int fan_in = config.input_dim;
    for (int width : config.hidden_layers) {
        shapes.emplace_back(fan_in, width);
        fan_in = width;
    }
    shapes.emplace_back(fan_in, config.output_width());
    return shapes;
}

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

double activate(double z, Activation act) {
    return act == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

}  // namespace

void validate_network(const NetworkConfig& config) {
    if (config.input_dim < 1) throw ConfigError("input_dim must be positive");
    for (int w : config.hidden_layers)
        if (w < 1) throw ConfigError("hidden layer widths must be positive");
    if (config.head_dim < 1) throw ConfigError("head_dim must be positive");
    if (config.task == Task::classification && config.head_dim < 2)
        throw ConfigError("classification needs at least 2 classes");
}

int param_dim(const NetworkConfig& config) {
    int d = 0;
    for (const auto& [fan_in, fan_out] : layer_shapes(config)) d += (fan_in + 1) * fan_out;
    return d;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

ParameterVector init_params(const NetworkConfig& config, std::uint64_t seed) {
    validate_network(config);
    PhiloxRng rng(seed, RngStream::param_init);
    ParameterVector theta(param_dim(config));
    Eigen::Index offset = 0;
    for (const auto& [fan_in, fan_out] : layer_shapes(config)) {
        const double scale = config.activation == Activation::relu
                                 ? std::sqrt(2.0 / double(fan_in))
                                 : std::sqrt(2.0 / double(fan_in + fan_out));
        for (int i = 0; i < fan_in * fan_out; ++i) theta[offset + i] = scale * rng.normal();
        offset += fan_in * fan_out;
        theta.segment(offset, fan_out).setZero();
        offset += fan_out;
    }
    return theta;
}

Eigen::MatrixXd forward(const NetworkConfig& config, const ParameterVector& theta,
                        const Eigen::MatrixXd& X) {
    validate_network(config);
    if (X.cols() != config.input_dim)
        throw ShapeError("input width " + std::to_string(X.cols()) + " != input_dim " +
                         std::to_string(config.input_dim));
    if (theta.size() != param_dim(config))
        throw ShapeError("parameter vector length " + std::to_string(theta.size()) +
                         " != d = " + std::to_string(param_dim(config)));

    const auto shapes = layer_shapes(config);
    Eigen::MatrixXd a = X;
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const auto [fan_in, fan_out] = shapes[l];
        ConstMatMap W(theta.data() + offset, fan_in, fan_out);
        offset += Eigen::Index(fan_in) * fan_out;
        ConstVecMap b(theta.data() + offset, fan_out);
        offset += fan_out;
        Eigen::MatrixXd z = (a * W).rowwise() + b.transpose();
        if (l + 1 < shapes.size()) {
            a = z.unaryExpr([&](double v) { return activate(v, config.activation); });
        } else {
            a = std::move(z);
        }
    }
    return a;
}

GaussianHead decode_gaussian_head(const Eigen::MatrixXd& raw, double sigma_min) {
    if (raw.cols() % 2 != 0) throw ShapeError("gaussian head expects even raw width");
    const Eigen::Index t = raw.cols() / 2;
    GaussianHead head;
    head.mu = raw.leftCols(t);
    head.sigma = raw.rightCols(t).unaryExpr(
        [sigma_min](double s) { return softplus(s) + sigma_min; });
    return head;
}

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2 pi)

/// Per-row NLL; also writes d(NLL)/d(raw output) into `grad_out` when asked.
double nll_from_raw(const NetworkConfig& config, const Eigen::MatrixXd& raw,
                    const Dataset& data, Eigen::MatrixXd* grad_out) {
    const Eigen::Index n = raw.rows();
    double total = 0.0;
    if (grad_out) grad_out->setZero(n, raw.cols());

    if (config.task == Task::regression) {
        const Eigen::Index t = config.head_dim;
        for (Eigen::Index i = 0; i < n; ++i) {
            double row_nll = 0.0;
            for (Eigen::Index j = 0; j < t; ++j) {
                const double mu = raw(i, j);
                const double s_raw = raw(i, t + j);
                const double sigma = softplus(s_raw) + kSigmaMin;
                const double r = data.y(i, j) - mu;
                row_nll += kHalfLog2Pi + std::log(sigma) + r * r / (2.0 * sigma * sigma);
                if (grad_out) {
                    const double inv_s2 = 1.0 / (sigma * sigma);
                    const double dsig = 1.0 / (1.0 + std::exp(-s_raw));  // softplus'
                    (*grad_out)(i, j) = -r * inv_s2;
                    (*grad_out)(i, t + j) = (1.0 / sigma - r * r * inv_s2 / sigma) * dsig;
                }
            }
            if (!std::isfinite(row_nll))
                throw NumericError("non-finite likelihood at row " + std::to_string(i));
            total += row_nll;
        }
    } else {
        const Eigen::Index k = config.head_dim;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double zmax = raw.row(i).maxCoeff();
            double sum = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) sum += std::exp(raw(i, j) - zmax);
            const double lse = zmax + std::log(sum);
            const int label = data.labels[std::size_t(i)];
            const double row_nll = lse - raw(i, label);
            if (!std::isfinite(row_nll))
                throw NumericError("non-finite likelihood at row " + std::to_string(i));
            total += row_nll;
            if (grad_out) {
                for (Eigen::Index j = 0; j < k; ++j)
                    (*grad_out)(i, j) = std::exp(raw(i, j) - lse) - (j == label ? 1.0 : 0.0);
            }
        }
    }
    return total;
}

}  // namespace

double negative_log_likelihood(const NetworkConfig& config, const ParameterVector& theta,
                               const Dataset& data) {
    validate_dataset(data, config.task == Task::classification ? config.head_dim : 0);
    const Eigen::MatrixXd raw = forward(config, theta, data.X);
    return nll_from_raw(config, raw, data, nullptr);
}

std::pair<double, ParameterVector> nll_value_and_grad(const NetworkConfig& config,
                                                      const ParameterVector& theta,
                                                      const Dataset& data) {
    validate_network(config);
    validate_dataset(data, config.task == Task::classification ? config.head_dim : 0);
    if (theta.size() != param_dim(config)) throw ShapeError("parameter vector length != d");

    const auto shapes = layer_shapes(config);
    const std::size_t n_layers = shapes.size();

    // Forward pass, keeping activations and pre-activations for the backward
    // sweep.
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    std::vector<Eigen::MatrixXd> pre(n_layers);
    acts[0] = data.X;
    Eigen::Index offset = 0;
    std::vector<Eigen::Index> w_offsets(n_layers), b_offsets(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto [fan_in, fan_out] = shapes[l];
        w_offsets[l] = offset;
        ConstMatMap W(theta.data() + offset, fan_in, fan_out);
        offset += Eigen::Index(fan_in) * fan_out;
        b_offsets[l] = offset;
        ConstVecMap b(theta.data() + offset, fan_out);
        offset += fan_out;
        pre[l] = (acts[l] * W).rowwise() + b.transpose();
        if (l + 1 < n_layers) {
            acts[l + 1] = pre[l].unaryExpr(
                [&](double v) { return activate(v, config.activation); });
        } else {
            acts[l + 1] = pre[l];
        }
    }

    Eigen::MatrixXd delta;
    const double nll = nll_from_raw(config, acts[n_layers], data, &delta);

    ParameterVector grad(theta.size());
    for (std::size_t l = n_layers; l-- > 0;) {
        const auto [fan_in, fan_out] = shapes[l];
        MatMap gW(grad.data() + w_offsets[l], fan_in, fan_out);
        VecMap gb(grad.data() + b_offsets[l], fan_out);
        gW = acts[l].transpose() * delta;
        gb = delta.colwise().sum();
        if (l > 0) {
            ConstMatMap W(theta.data() + w_offsets[l], fan_in, fan_out);
            Eigen::MatrixXd back = delta * W.transpose();
            if (config.activation == Activation::relu) {
                delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
            } else {
                delta = back.array() * (1.0 - pre[l - 1].array().tanh().square());
            }
        }
    }
    return {nll, std::move(grad)};
}

double log_posterior(const NetworkConfig& config, const ParameterVector& theta,
                     const Dataset& data, const PriorSpec& prior) {
    if (prior.prior_std <= 0.0) throw ConfigError("prior_std must be positive");
    const double penalty = negative_log_likelihood(config, theta, data) +
                           theta.squaredNorm() / (2.0 * prior.prior_std * prior.prior_std);
    return -penalty;
}

ParameterVector grad_log_posterior(const NetworkConfig& config, const ParameterVector& theta,
                                   const Dataset& data, const PriorSpec& prior) {
    if (prior.prior_std <= 0.0) throw ConfigError("prior_std must be positive");
    auto [nll, grad_nll] = nll_value_and_grad(config, theta, data);
    (void)nll;
    return -grad_nll - theta / (prior.prior_std * prior.prior_std);
}

}  // namespace bde
