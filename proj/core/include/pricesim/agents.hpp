#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pricesim/market.hpp"
#include "pricesim/policy.hpp"
#include "pricesim/random.hpp"
#include "pricesim/replay.hpp"

namespace pricesim {

struct AgentId {
    std::size_t index = 0;
    std::string label;

    bool operator==(const AgentId&) const = default;
};

enum class UpdateRule {
    kVanillaPg,   // one ascent step per collected sample, buffer cleared after
    kPpoClear,    // clipped PPO, updates when the buffer is full, then clears
    kPpoRolling,  // clipped PPO every step on a rolling truncated buffer
};

// Exponential moving statistics of observed rewards. ema_value is the
// advantage baseline; ema_abs tracks the reward magnitude and normalizes
// advantages so the update step size is invariant to the traffic scale.
// Both EMAs are bias-corrected by 1 - decay^n (n = observations so far),
// otherwise the very first rewards would tower over the near-zero baseline
// and blow the policy across the price range before it ever learns.
struct RewardBaseline {
    double ema_value = 0.0;
    double ema_abs = 0.0;
    double decay = 0.99;
    std::int64_t observations = 0;

    void observe(double reward) {
        ema_value = decay * ema_value + (1.0 - decay) * reward;
        ema_abs = decay * ema_abs + (1.0 - decay) * std::abs(reward);
        ++observations;
    }

    double value() const;      // bias-corrected baseline
    double magnitude() const;  // bias-corrected mean |reward|

    // (reward - value()) / max(magnitude(), 1): centered by the running
    // baseline, scaled to O(1) by the running reward magnitude.
    double advantage(double reward) const;

    bool operator==(const RewardBaseline&) const = default;
};

struct BanditConfig {
    UpdateRule update_rule = UpdateRule::kPpoRolling;
    double learning_rate = 1e-2;
    double clip_epsilon = 0.2;
    std::size_t buffer_capacity = 16;
    int epochs_per_update = 4;
    double baseline_decay = 0.99;
    double pull_rate = 0.02;
    int no_reward_window = 10;
    bool log_space = false;
    GaussianPolicyParams initial_params;

    bool operator==(const BanditConfig&) const = default;
};

// Range/positivity checks on every BanditConfig field; throws ConfigError.
void validate_bandit_config(const BanditConfig& config);

// Ratio ceiling of the dual-clip term below. Rolling buffers hold samples up
// to bufferCapacity steps stale; once the policy has drifted, a stale
// negative-advantage sample can reach a density ratio in the hundreds, and
// the one-sided PPO clip leaves that branch unbounded — a single such sample
// then yanks the mean across the whole price range. Flattening the objective
// once the ratio passes this ceiling removes that failure mode and is a
// no-op in the on-policy regime (ratios near 1).
inline constexpr double kDualClipRatioCeiling = 2.0;

// Mean over the batch of the dual-clipped PPO surrogate: the usual
//   min(rho_i * A_i, clip(rho_i, 1-eps, 1+eps) * A_i)
// floored (negative advantages only) at kDualClipRatioCeiling * A_i, with
// rho_i the density ratio of batch[i].raw_action under params versus the
// recorded behavior policy.
double ppo_surrogate(const GaussianPolicyParams& params, std::span<const Experience> batch,
                     std::span<const double> advantages, double clip_epsilon);

// Gradient of ppo_surrogate in (mean, scale_param). A sample contributes
// A * rho * grad log_prob when the unclipped branch is active and zero once
// either clip saturates it.
LogProbGrad ppo_surrogate_grad(const GaussianPolicyParams& params,
                               std::span<const Experience> batch,
                               std::span<const double> advantages, double clip_epsilon);

// Mean over the batch of A * grad log_prob: the REINFORCE estimator.
LogProbGrad vanilla_pg_grad(const GaussianPolicyParams& params,
                            std::span<const Experience> batch,
                            std::span<const double> advantages);

// Fixed-price seller. Stateless: same bid every step, no randomness.
struct FixedAgent {
    Price price;

    Price bid() const { return price; }
};

// Seller sampling from a fixed Gaussian over price. The distribution never
// changes; only the draws do.
class StochasticAgent {
public:
    StochasticAgent(double mean, double stddev, PriceBounds bounds, RandomStream rng);

    Price bid();

    double mean() const { return mean_; }
    double stddev() const { return stddev_; }

private:
    double mean_;
    double stddev_;
    PriceBounds bounds_;
    RandomStream rng_;
};

// Everything a trainable bandit needs carried across a process restart.
struct BanditState {
    GaussianPolicyParams params;
    RewardBaseline baseline;
    std::vector<Experience> buffer_entries;
    int zero_reward_streak = 0;
    std::string rng_state;
};

// Trainable Gaussian bandit over price.
//
// Per step the owner calls bid(), then observe() with the realized reward,
// then learn(). observe() records the experience (zero rewards included; the
// policy has to learn from rejections), truncates the buffer to capacity, and
// maintains the reward statistics and the zero-reward streak. learn() either
// runs the configured update rule or, after no_reward_window consecutive
// zero-reward steps, pulls the parameters toward their initial values
// instead, so the variance cannot grow without bound while demand is gone.
class BanditAgent {
public:
    BanditAgent(BanditConfig config, PriceBounds bounds, RandomStream rng);

    Price bid(std::int64_t step);

    // Draws from the current policy without registering a pending bid; the
    // caller owns the sample and later feeds it back through the explicit
    // observe overload. Used by the control loop, where the outcome arrives
    // a whole aggregation window later.
    ActionSample sample();

    // Records the outcome of the most recent bid().
    void observe(Reward reward);

    // Records an externally sampled action; behavior_log_prob is taken from
    // the current parameters, so call it before any intervening update.
    void observe(double raw_action, Price price, Reward reward, std::int64_t step);

    // Applies the update rule or the pull, per trigger. Throws
    // SimulationFault if a gradient or parameter turns non-finite.
    void learn();

    // One pull step: params += pull_rate * (initial - params), componentwise
    // in (mean, scale_param). Repeated application converges geometrically.
    void pull_toward_initial();

    PolicySnapshot snapshot(std::int64_t step) const;

    const GaussianPolicyParams& params() const { return params_; }
    const BanditConfig& config() const { return config_; }
    const PriceBounds& bounds() const { return bounds_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const RewardBaseline& baseline() const { return baseline_; }
    int zero_reward_streak() const { return zero_reward_streak_; }

    BanditState export_state() const;
    static BanditAgent restore(BanditConfig config, PriceBounds bounds, const BanditState& state);

private:
    void ascend(const LogProbGrad& gradient);
    void update_vanilla_pg();
    void update_ppo();

    BanditConfig config_;
    PriceBounds bounds_;
    GaussianPolicyParams params_;
    ReplayBuffer buffer_;
    RewardBaseline baseline_;
    RandomStream rng_;
    int zero_reward_streak_ = 0;

    // last bid, consumed by observe(Reward)
    double last_raw_action_ = 0.0;
    Price last_price_;
    std::int64_t last_step_ = 0;
    bool has_pending_bid_ = false;
};

}  // namespace pricesim
