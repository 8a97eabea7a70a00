#include "pricesim/policy.hpp"

#include <cmath>

namespace pricesim {

namespace {
constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // ln(2 pi) / 2
}

double GaussianPolicyParams::stddev() const {
    return std::exp(scale_param);
}

ActionSample sample_action(const GaussianPolicyParams& params, const PriceBounds& bounds,
                           bool log_space, RandomStream& rng) {
    const double raw = rng.gaussian(params.mean, params.stddev());
    const double transformed = log_space ? std::exp(raw) : raw;
    return ActionSample{raw, Price{bounds.clamp(transformed)}};
}

double log_prob(const GaussianPolicyParams& params, double raw_action) {
    const double sd = params.stddev();
    const double z = (raw_action - params.mean) / sd;
    return -0.5 * z * z - params.scale_param - kHalfLogTwoPi;
}

LogProbGrad log_prob_grad(const GaussianPolicyParams& params, double raw_action) {
    const double sd = params.stddev();
    const double diff = raw_action - params.mean;
    const double z2 = (diff * diff) / (sd * sd);
    return LogProbGrad{diff / (sd * sd), z2 - 1.0};
}

double param_distance(const GaussianPolicyParams& a, const GaussianPolicyParams& b) {
    const double dm = a.mean - b.mean;
    const double ds = a.scale_param - b.scale_param;
    return std::sqrt(dm * dm + ds * ds);
}

}  // namespace pricesim
