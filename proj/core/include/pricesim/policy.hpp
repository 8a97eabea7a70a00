#pragma once

#include <cstdint>

#include "pricesim/market.hpp"
#include "pricesim/random.hpp"

namespace pricesim {

// Parameters of a 1-D Gaussian policy over price. The standard deviation is
// parameterized as exp(scale_param) so gradient steps can never drive it to
// zero or below. When the owning agent runs in log-price mode, `mean` lives
// in log-price space; log-densities are always evaluated in the raw sampling
// space either way.
struct GaussianPolicyParams {
    double mean = 0.0;
    double scale_param = 0.0;

    double stddev() const;

    bool operator==(const GaussianPolicyParams&) const = default;
};

// Point-in-time view of a policy, for metrics and plotting.
struct PolicySnapshot {
    double mean = 0.0;
    double stddev = 1.0;
    std::int64_t step = 0;

    bool operator==(const PolicySnapshot&) const = default;
};

struct ActionSample {
    double raw_action = 0.0;  // unclamped Gaussian draw, in sampling space
    Price price;              // transformed and clamped to bounds
};

// Draws raw ~ Normal(mean, stddev) and maps it to a bid. The transform is
// identity in linear mode and exp in log-price mode; the result is clamped to
// bounds. Clamping is an environment effect: the raw action is what log
// probabilities are evaluated on.
ActionSample sample_action(const GaussianPolicyParams& params, const PriceBounds& bounds,
                           bool log_space, RandomStream& rng);

// Gaussian log-density of a raw action:
//   -(a - mean)^2 / (2 stddev^2) - scale_param - ln(2 pi)/2
double log_prob(const GaussianPolicyParams& params, double raw_action);

struct LogProbGrad {
    double d_mean = 0.0;
    double d_scale_param = 0.0;
};

// Analytic gradient of log_prob with respect to (mean, scale_param):
//   d_mean        = (a - mean) / stddev^2
//   d_scale_param = (a - mean)^2 / stddev^2 - 1
LogProbGrad log_prob_grad(const GaussianPolicyParams& params, double raw_action);

// Euclidean distance in (mean, scale_param) space. Drives the convergence
// checks for the pull-to-initial mechanism.
double param_distance(const GaussianPolicyParams& a, const GaussianPolicyParams& b);

}  // namespace pricesim
