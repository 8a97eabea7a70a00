#include "pricesim/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "pricesim/errors.hpp"

namespace pricesim {
namespace {

template <typename Segment>
void validate_schedule(const std::vector<Segment>& schedule, const char* name) {
    if (schedule.empty()) {
        throw ConfigError(std::string(name) + " must have at least one segment");
    }
    if (schedule.front().start_step != 0) {
        throw ConfigError(std::string(name) + " must start at step 0");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i].start_step <= schedule[i - 1].start_step) {
            throw ConfigError(std::string(name) +
                              " segments must have strictly increasing start steps");
        }
    }
}

// Last segment whose start_step is <= step. Schedules are validated to start
// at 0, so this always finds one.
template <typename Segment>
const Segment& segment_at(const std::vector<Segment>& schedule, std::int64_t step) {
    auto it = std::upper_bound(
        schedule.begin(), schedule.end(), step,
        [](std::int64_t s, const Segment& seg) { return s < seg.start_step; });
    return *std::prev(it);
}

}  // namespace

void validate_traffic(const TrafficConfig& config) {
    if (!(config.base_volume >= 0.0) || !std::isfinite(config.base_volume)) {
        throw ConfigError("baseVolume must be finite and >= 0");
    }
    if (!(config.noise_stddev >= 0.0) || !std::isfinite(config.noise_stddev)) {
        throw ConfigError("noiseStddev must be finite and >= 0");
    }
    validate_schedule(config.budget_schedule, "budgetSchedule");
    validate_schedule(config.volume_schedule, "volumeSchedule");
    for (const BudgetSegment& seg : config.budget_schedule) {
        if (!(seg.budget >= 0.0) || !std::isfinite(seg.budget)) {
            throw ConfigError("budgetSchedule budgets must be finite and >= 0");
        }
    }
    for (const VolumeSegment& seg : config.volume_schedule) {
        if (!(seg.multiplier >= 0.0) || !std::isfinite(seg.multiplier)) {
            throw ConfigError("volumeSchedule multipliers must be finite and >= 0");
        }
    }
}

double budget_at(const TrafficConfig& config, std::int64_t step) {
    return segment_at(config.budget_schedule, step).budget;
}

double volume_multiplier_at(const TrafficConfig& config, std::int64_t step) {
    return segment_at(config.volume_schedule, step).multiplier;
}

TrafficSample generate_traffic(const TrafficConfig& config, std::int64_t step,
                               RandomStream& rng) {
    const double noise = rng.gaussian(0.0, config.noise_stddev);
    const double raw = config.base_volume * volume_multiplier_at(config, step) + noise;
    return TrafficSample{QueryVolume{std::max(0.0, raw)},
                         Budget{budget_at(config, step)}};
}

}  // namespace pricesim
