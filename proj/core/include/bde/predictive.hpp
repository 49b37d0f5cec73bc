#pragma once

#include <vector>

#include <Eigen/Core>

#include "bde/ensemble.hpp"

namespace bde {

/// Posterior-predictive moments in original target units.
struct PredictiveMoments {
    Eigen::MatrixXd mean;  // n x t
    Eigen::MatrixXd std;   // n x t
};

/// Forward pass of every stored sample on X (raw feature units).
/// Regression entries are decoded and de-standardized to (mu..., sigma...);
/// classification entries are softmax probabilities.
std::vector<Eigen::MatrixXd> predict_raw(const PosteriorEnsemble& ens,
                                         const Eigen::MatrixXd& X);

/// Equal-weight Gaussian mixture moments via the law of total variance,
/// computed with a two-pass formula. Regression only.
PredictiveMoments predict_moments(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X);

/// Mixture-CDF quantiles by bisection (absolute tolerance 1e-8 on y).
/// One n x t matrix per requested level; levels must lie strictly in (0,1).
std::vector<Eigen::MatrixXd> predict_quantiles(const PosteriorEnsemble& ens,
                                               const Eigen::MatrixXd& X,
                                               const std::vector<double>& levels);

/// Mean over samples of the per-sample softmax. Classification only.
Eigen::MatrixXd predict_proba(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X);

/// Argmax of predict_proba with lowest-index tie-breaking.
std::vector<int> predict_class(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X);

double metric_rmse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);

/// Mean over test points of -ln[(1/S) sum_s N(y | mu_s, sigma_s^2)],
/// evaluated with log-sum-exp.
double metric_nll_distributional(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& y);

/// Homoscedastic Gaussian NLL with plug-in sigma = rmse (clamped >= 1e-6).
double metric_nll_mean_regression(const Eigen::MatrixXd& y_true,
                                  const Eigen::MatrixXd& y_pred);

/// Fraction of y values inside the [lo, hi] predictive quantiles.
double metric_coverage(const PosteriorEnsemble& ens, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& y, double lo, double hi);

/// Per-sample Gaussian heads on standardized features, de-standardized to
/// original units. Building block shared by the predictive operations.
std::vector<GaussianHead> collect_heads(const PosteriorEnsemble& ens,
                                        const Eigen::MatrixXd& X);

}  // namespace bde
