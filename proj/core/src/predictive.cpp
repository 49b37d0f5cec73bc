#include "bde/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bde/errors.hpp"

namespace bde {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

void require_task(const PosteriorEnsemble& ens, Task task) {
    if (ens.net().task != task)
        throw ConfigError(task == Task::regression
                              ? "operation requires a regression ensemble"
                              : "operation requires a classification ensemble");
}

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double zmax = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - zmax).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

}  // namespace

std::vector<GaussianHead> collect_heads(const PosteriorEnsemble& ens,
                                        const Eigen::MatrixXd& X) {
    require_task(ens, Task::regression);
    const Eigen::MatrixXd Xs = standardize_features(ens.standardization, X);
    const auto& stats = ens.standardization;
    std::vector<GaussianHead> heads;
    heads.reserve(std::size_t(ens.num_samples()));
    for (Eigen::Index s = 0; s < ens.num_samples(); ++s) {
        const Eigen::MatrixXd raw = forward(ens.net(), ens.samples.row(s).transpose(), Xs);
        GaussianHead head = decode_gaussian_head(raw);
        head.mu = destandardize_targets(stats, head.mu);
        head.sigma = head.sigma.array().rowwise() * stats.y_scale.transpose().array();
        heads.push_back(std::move(head));
    }
    return heads;
}

std::vector<Eigen::MatrixXd> predict_raw(const PosteriorEnsemble& ens,
                                         const Eigen::MatrixXd& X) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(std::size_t(ens.num_samples()));
    if (ens.net().task == Task::regression) {
        for (auto& head : collect_heads(ens, X)) {
            Eigen::MatrixXd block(head.mu.rows(), 2 * head.mu.cols());
            block << head.mu, head.sigma;
            out.push_back(std::move(block));
        }
    } else {
        const Eigen::MatrixXd Xs = standardize_features(ens.standardization, X);
        for (Eigen::Index s = 0; s < ens.num_samples(); ++s)
            out.push_back(
                softmax_rows(forward(ens.net(), ens.samples.row(s).transpose(), Xs)));
    }
    return out;
}

PredictiveMoments predict_moments(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X) {
    const auto heads = collect_heads(ens, X);
    const double S = double(heads.size());
    PredictiveMoments m;
    m.mean = Eigen::MatrixXd::Zero(heads[0].mu.rows(), heads[0].mu.cols());
    for (const auto& h : heads) m.mean += h.mu;
    m.mean /= S;

    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m.mean.rows(), m.mean.cols());
    for (const auto& h : heads) {
        var += h.sigma.array().square().matrix();
        var += (h.mu - m.mean).array().square().matrix();
    }
    m.std = (var / S).array().sqrt();
    return m;
}

namespace {

/// Mixture CDF at y for one test point / target, over all sample heads.
double mixture_cdf(const std::vector<GaussianHead>& heads, Eigen::Index i, Eigen::Index j,
                   double y) {
    double acc = 0.0;
    for (const auto& h : heads) acc += gaussian_cdf((y - h.mu(i, j)) / h.sigma(i, j));
    return acc / double(heads.size());
}

}  // namespace

std::vector<Eigen::MatrixXd> predict_quantiles(const PosteriorEnsemble& ens,
                                               const Eigen::MatrixXd& X,
                                               const std::vector<double>& levels) {
    for (double level : levels)
        if (!(level > 0.0 && level < 1.0))
            throw ConfigError("quantile level " + std::to_string(level) +
                              " must lie strictly inside (0, 1)");
    const auto heads = collect_heads(ens, X);
    const Eigen::Index n = heads[0].mu.rows();
    const Eigen::Index t = heads[0].mu.cols();

    std::vector<Eigen::MatrixXd> out(levels.size(), Eigen::MatrixXd(n, t));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
            double mu_lo = std::numeric_limits<double>::infinity();
            double mu_hi = -mu_lo;
            double sigma_max = 0.0;
            for (const auto& h : heads) {
                mu_lo = std::min(mu_lo, h.mu(i, j));
                mu_hi = std::max(mu_hi, h.mu(i, j));
                sigma_max = std::max(sigma_max, h.sigma(i, j));
            }
            for (std::size_t l = 0; l < levels.size(); ++l) {
                double lo = mu_lo - 10.0 * sigma_max;
                double hi = mu_hi + 10.0 * sigma_max;
                while (hi - lo > 1e-8) {
                    const double mid = 0.5 * (lo + hi);
                    (mixture_cdf(heads, i, j, mid) < levels[l] ? lo : hi) = mid;
                }
                out[l](i, j) = 0.5 * (lo + hi);
            }
        }
    }
    return out;
}

Eigen::MatrixXd predict_proba(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X) {
    require_task(ens, Task::classification);
    const Eigen::MatrixXd Xs = standardize_features(ens.standardization, X);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(Xs.rows(), ens.net().head_dim);
    for (Eigen::Index s = 0; s < ens.num_samples(); ++s)
        acc += softmax_rows(forward(ens.net(), ens.samples.row(s).transpose(), Xs));
    return acc / double(ens.num_samples());
}

std::vector<int> predict_class(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd proba = predict_proba(ens, X);
    std::vector<int> labels(std::size_t(proba.rows()));
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < proba.cols(); ++j)
            if (proba(i, j) > proba(i, best)) best = int(j);
        labels[std::size_t(i)] = best;
    }
    return labels;
}

double metric_rmse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
    if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols())
        throw ShapeError("rmse shape mismatch");
    if (y_true.size() == 0) throw DataError("rmse of empty input");
    return std::sqrt((y_true - y_pred).array().square().mean());
}

double metric_nll_distributional(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& y) {
    const auto heads = collect_heads(ens, X);
    const Eigen::Index n = y.rows();
    if (heads[0].mu.rows() != n || heads[0].mu.cols() != y.cols())
        throw ShapeError("target shape mismatch in distributional NLL");
    if (n == 0) throw DataError("distributional NLL of empty input");
    const double log_s = std::log(double(heads.size()));

    double total = 0.0;
    std::vector<double> logdens(heads.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < heads.size(); ++s) {
            double ld = 0.0;
            for (Eigen::Index j = 0; j < y.cols(); ++j) {
                const double sig = heads[s].sigma(i, j);
                const double r = y(i, j) - heads[s].mu(i, j);
                ld += -kHalfLog2Pi - std::log(sig) - r * r / (2.0 * sig * sig);
            }
            logdens[s] = ld;
        }
        const double zmax = *std::max_element(logdens.begin(), logdens.end());
        double acc = 0.0;
        for (double ld : logdens) acc += std::exp(ld - zmax);
        total += -(zmax + std::log(acc) - log_s);
    }
    return total / double(n);
}

double metric_nll_mean_regression(const Eigen::MatrixXd& y_true,
                                  const Eigen::MatrixXd& y_pred) {
    const double sigma = std::max(metric_rmse(y_true, y_pred), 1e-6);
    const double mse = (y_true - y_pred).array().square().mean();
    return kHalfLog2Pi + std::log(sigma) + mse / (2.0 * sigma * sigma);
}

double metric_coverage(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& y, double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("coverage interval must satisfy lo < hi");
    const auto q = predict_quantiles(ens, X, {lo, hi});
    if (y.rows() != q[0].rows() || y.cols() != q[0].cols())
        throw ShapeError("target shape mismatch in coverage");
    Eigen::Index inside = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.cols(); ++j)
            if (y(i, j) >= q[0](i, j) && y(i, j) <= q[1](i, j)) ++inside;
    return double(inside) / double(y.size());
}

}  // namespace bde
