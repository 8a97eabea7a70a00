#include "pricesim/agents.hpp"

#include <algorithm>
#include <cmath>

#include "pricesim/errors.hpp"

namespace pricesim {
namespace {

bool finite(double x) { return std::isfinite(x); }

void require_finite_params(const GaussianPolicyParams& p) {
    if (!finite(p.mean) || !finite(p.scale_param)) {
        throw SimulationFault("bandit parameters diverged to a non-finite value");
    }
}

std::vector<double> compute_advantages(const RewardBaseline& baseline,
                                       std::span<const Experience> batch) {
    std::vector<double> advantages;
    advantages.reserve(batch.size());
    for (const Experience& e : batch) {
        advantages.push_back(baseline.advantage(e.reward));
    }
    return advantages;
}

}  // namespace

double RewardBaseline::value() const {
    if (observations == 0) {
        return 0.0;
    }
    return ema_value / (1.0 - std::pow(decay, static_cast<double>(observations)));
}

double RewardBaseline::magnitude() const {
    if (observations == 0) {
        return 0.0;
    }
    return ema_abs / (1.0 - std::pow(decay, static_cast<double>(observations)));
}

double RewardBaseline::advantage(double reward) const {
    return (reward - value()) / std::max(magnitude(), 1.0);
}

void validate_bandit_config(const BanditConfig& config) {
    if (config.learning_rate <= 0.0 || !finite(config.learning_rate)) {
        throw ConfigError("learningRate must be positive and finite");
    }
    if (config.clip_epsilon <= 0.0 || config.clip_epsilon >= 1.0) {
        throw ConfigError("clipEpsilon must lie in (0, 1)");
    }
    if (config.buffer_capacity == 0) {
        throw ConfigError("bufferCapacity must be >= 1");
    }
    if (config.epochs_per_update < 1) {
        throw ConfigError("epochsPerUpdate must be >= 1");
    }
    if (config.baseline_decay < 0.0 || config.baseline_decay >= 1.0) {
        throw ConfigError("baselineDecay must lie in [0, 1)");
    }
    if (config.pull_rate <= 0.0 || config.pull_rate > 1.0) {
        throw ConfigError("pullRate must lie in (0, 1]");
    }
    if (config.no_reward_window < 1) {
        throw ConfigError("noRewardWindow must be >= 1");
    }
    if (!finite(config.initial_params.mean) || !finite(config.initial_params.scale_param)) {
        throw ConfigError("initial policy parameters must be finite");
    }
}

double ppo_surrogate(const GaussianPolicyParams& params, std::span<const Experience> batch,
                     std::span<const double> advantages, double clip_epsilon) {
    if (batch.empty() || batch.size() != advantages.size()) {
        throw ConfigError("ppo_surrogate needs a non-empty batch with matching advantages");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double ratio = std::exp(log_prob(params, batch[i].raw_action) -
                                      batch[i].behavior_log_prob);
        const double clipped =
            std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        double term = std::min(ratio * advantages[i], clipped * advantages[i]);
        if (advantages[i] < 0.0) {
            term = std::max(term, kDualClipRatioCeiling * advantages[i]);
        }
        total += term;
    }
    return total / static_cast<double>(batch.size());
}

LogProbGrad ppo_surrogate_grad(const GaussianPolicyParams& params,
                               std::span<const Experience> batch,
                               std::span<const double> advantages, double clip_epsilon) {
    if (batch.empty() || batch.size() != advantages.size()) {
        throw ConfigError("ppo_surrogate_grad needs a non-empty batch with matching advantages");
    }
    LogProbGrad grad;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double ratio = std::exp(log_prob(params, batch[i].raw_action) -
                                      batch[i].behavior_log_prob);
        const double clipped =
            std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        // d/dtheta of ratio * A is A * ratio * grad log_prob; the clipped and
        // dual-clip branches are constant in theta, so a sample contributes
        // nothing once either one is the active branch.
        const bool unclipped_active =
            ratio * advantages[i] <= clipped * advantages[i] &&
            (advantages[i] >= 0.0 || ratio <= kDualClipRatioCeiling);
        if (unclipped_active) {
            const LogProbGrad g = log_prob_grad(params, batch[i].raw_action);
            const double w = advantages[i] * ratio;
            grad.d_mean += w * g.d_mean;
            grad.d_scale_param += w * g.d_scale_param;
        }
    }
    const double n = static_cast<double>(batch.size());
    grad.d_mean /= n;
    grad.d_scale_param /= n;
    return grad;
}

LogProbGrad vanilla_pg_grad(const GaussianPolicyParams& params,
                            std::span<const Experience> batch,
                            std::span<const double> advantages) {
    if (batch.empty() || batch.size() != advantages.size()) {
        throw ConfigError("vanilla_pg_grad needs a non-empty batch with matching advantages");
    }
    LogProbGrad grad;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const LogProbGrad g = log_prob_grad(params, batch[i].raw_action);
        grad.d_mean += advantages[i] * g.d_mean;
        grad.d_scale_param += advantages[i] * g.d_scale_param;
    }
    const double n = static_cast<double>(batch.size());
    grad.d_mean /= n;
    grad.d_scale_param /= n;
    return grad;
}

StochasticAgent::StochasticAgent(double mean, double stddev, PriceBounds bounds,
                                 RandomStream rng)
    : mean_(mean), stddev_(stddev), bounds_(bounds), rng_(std::move(rng)) {
    if (stddev < 0.0) {
        throw ConfigError("stochastic agent stddev must be >= 0");
    }
}

Price StochasticAgent::bid() {
    return Price{bounds_.clamp(rng_.gaussian(mean_, stddev_))};
}

BanditAgent::BanditAgent(BanditConfig config, PriceBounds bounds, RandomStream rng)
    : config_(config),
      bounds_(bounds),
      params_(config.initial_params),
      buffer_(config.buffer_capacity),
      baseline_{0.0, 0.0, config.baseline_decay},
      rng_(std::move(rng)) {
    validate_bandit_config(config_);
}

Price BanditAgent::bid(std::int64_t step) {
    const ActionSample sample = sample_action(params_, bounds_, config_.log_space, rng_);
    last_raw_action_ = sample.raw_action;
    last_price_ = sample.price;
    last_step_ = step;
    has_pending_bid_ = true;
    return sample.price;
}

ActionSample BanditAgent::sample() {
    return sample_action(params_, bounds_, config_.log_space, rng_);
}

void BanditAgent::observe(Reward reward) {
    if (!has_pending_bid_) {
        throw SimulationFault("observe(Reward) called without a preceding bid()");
    }
    has_pending_bid_ = false;
    observe(last_raw_action_, last_price_, reward, last_step_);
}

void BanditAgent::observe(double raw_action, Price price, Reward reward, std::int64_t step) {
    if (!finite(reward.value)) {
        throw SimulationFault("non-finite reward fed to bandit");
    }
    const double behavior_log_prob = log_prob(params_, raw_action);
    buffer_.push(Experience{raw_action, price.value, reward.value, behavior_log_prob, step});
    baseline_.observe(reward.value);
    if (reward.value == 0.0) {
        ++zero_reward_streak_;
    } else {
        zero_reward_streak_ = 0;
    }
}

void BanditAgent::learn() {
    if (zero_reward_streak_ >= config_.no_reward_window) {
        pull_toward_initial();
        return;
    }
    switch (config_.update_rule) {
        case UpdateRule::kVanillaPg:
            update_vanilla_pg();
            break;
        case UpdateRule::kPpoClear:
            if (buffer_.full()) {
                update_ppo();
                buffer_.clear();
            }
            break;
        case UpdateRule::kPpoRolling:
            if (!buffer_.empty()) {
                update_ppo();
            }
            break;
    }
}

void BanditAgent::pull_toward_initial() {
    const GaussianPolicyParams& init = config_.initial_params;
    params_.mean += config_.pull_rate * (init.mean - params_.mean);
    params_.scale_param += config_.pull_rate * (init.scale_param - params_.scale_param);
    require_finite_params(params_);
}

void BanditAgent::ascend(const LogProbGrad& gradient) {
    if (!finite(gradient.d_mean) || !finite(gradient.d_scale_param)) {
        throw SimulationFault("non-finite policy gradient");
    }
    params_.mean += config_.learning_rate * gradient.d_mean;
    params_.scale_param += config_.learning_rate * gradient.d_scale_param;
    require_finite_params(params_);
}

void BanditAgent::update_vanilla_pg() {
    if (buffer_.empty()) {
        return;
    }
    const std::vector<double> advantages = compute_advantages(baseline_, buffer_.entries());
    ascend(vanilla_pg_grad(params_, buffer_.entries(), advantages));
    buffer_.clear();
}

void BanditAgent::update_ppo() {
    const std::vector<double> advantages = compute_advantages(baseline_, buffer_.entries());
    for (int epoch = 0; epoch < config_.epochs_per_update; ++epoch) {
        ascend(ppo_surrogate_grad(params_, buffer_.entries(), advantages,
                                  config_.clip_epsilon));
    }
}

PolicySnapshot BanditAgent::snapshot(std::int64_t step) const {
    return PolicySnapshot{params_.mean, params_.stddev(), step};
}

BanditState BanditAgent::export_state() const {
    BanditState state;
    state.params = params_;
    state.baseline = baseline_;
    state.buffer_entries = buffer_.entries();
    state.zero_reward_streak = zero_reward_streak_;
    state.rng_state = rng_.save_state();
    return state;
}

BanditAgent BanditAgent::restore(BanditConfig config, PriceBounds bounds,
                                 const BanditState& state) {
    BanditAgent agent(config, bounds, RandomStream(0));
    agent.params_ = state.params;
    agent.baseline_ = state.baseline;
    agent.baseline_.decay = config.baseline_decay;
    agent.buffer_.clear();
    for (const Experience& e : state.buffer_entries) {
        agent.buffer_.push(e);
    }
    agent.zero_reward_streak_ = state.zero_reward_streak;
    agent.rng_.restore_state(state.rng_state);
    require_finite_params(agent.params_);
    return agent;
}

}  // namespace pricesim
