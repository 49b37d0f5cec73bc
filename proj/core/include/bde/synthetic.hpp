#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bde/data.hpp"

namespace bde {

/// Shipped synthetic regression generators used by the benchmark suite and
/// the calibration tests. All are deterministic in (seed, n).
namespace synthetic {

/// y = X w + b + 0.1 eps, X ~ N(0,1)^5.
Dataset linear(Eigen::Index n, std::uint64_t seed);

/// One input, y = sin(2 x) + s(x) eps with s(x) = 0.1 + 0.1 (1 + sin x).
/// Heteroscedastic by construction; `noise_sd` returns s(x).
Dataset sine_heteroscedastic(Eigen::Index n, std::uint64_t seed);
double sine_noise_sd(double x);
double sine_mean(double x);

/// Friedman-style nonlinear surface on 10 uniform features (5 active):
/// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + eps.
Dataset friedman(Eigen::Index n, std::uint64_t seed);

const std::vector<std::string>& suite_names();
Dataset generate(const std::string& suite, Eigen::Index n, std::uint64_t seed);

}  // namespace synthetic
}  // namespace bde
