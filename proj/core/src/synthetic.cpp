#include "bde/synthetic.hpp"

#include <cmath>

#include "bde/errors.hpp"
#include "bde/rng.hpp"

namespace bde::synthetic {

Dataset linear(Eigen::Index n, std::uint64_t seed) {
    PhiloxRng rng(seed, RngStream::synthetic);
    const Eigen::Index p = 5;
    Eigen::VectorXd w(p);
    for (Eigen::Index j = 0; j < p; ++j) w[j] = 0.5 * double(j + 1);
    Dataset data;
    data.task = Task::regression;
    data.X.resize(n, p);
    data.y.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) data.X(i, j) = rng.normal();
        data.y(i, 0) = data.X.row(i) * w + 0.5 + 0.1 * rng.normal();
    }
    return data;
}

double sine_mean(double x) { return std::sin(2.0 * x); }

double sine_noise_sd(double x) { return 0.1 + 0.1 * (1.0 + std::sin(x)); }

Dataset sine_heteroscedastic(Eigen::Index n, std::uint64_t seed) {
    PhiloxRng rng(seed, RngStream::synthetic);
    Dataset data;
    data.task = Task::regression;
    data.X.resize(n, 1);
    data.y.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = -3.0 + 6.0 * rng.uniform01();
        data.X(i, 0) = x;
        data.y(i, 0) = sine_mean(x) + sine_noise_sd(x) * rng.normal();
    }
    return data;
}

Dataset friedman(Eigen::Index n, std::uint64_t seed) {
    PhiloxRng rng(seed, RngStream::synthetic);
    const Eigen::Index p = 10;
    Dataset data;
    data.task = Task::regression;
    data.X.resize(n, p);
    data.y.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) data.X(i, j) = rng.uniform01();
        data.y(i, 0) = 10.0 * std::sin(M_PI * data.X(i, 0) * data.X(i, 1)) +
                       20.0 * (data.X(i, 2) - 0.5) * (data.X(i, 2) - 0.5) +
                       10.0 * data.X(i, 3) + 5.0 * data.X(i, 4) + rng.normal();
    }
    return data;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"linear", "sine_heteroscedastic",
                                                   "friedman"};
    return names;
}

Dataset generate(const std::string& suite, Eigen::Index n, std::uint64_t seed) {
    if (suite == "linear") return linear(n, seed);
    if (suite == "sine_heteroscedastic") return sine_heteroscedastic(n, seed);
    if (suite == "friedman") return friedman(n, seed);
    throw ConfigError("unknown synthetic suite '" + suite + "'");
}

}  // namespace bde::synthetic
