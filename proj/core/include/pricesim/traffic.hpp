#pragma once

#include <cstdint>
#include <vector>

#include "pricesim/market.hpp"
#include "pricesim/random.hpp"

namespace pricesim {

// Piecewise-constant schedule segment: value applies from start_step (inclusive)
// until the next segment's start_step.
struct BudgetSegment {
    std::int64_t start_step = 0;
    double budget = 0.0;

    bool operator==(const BudgetSegment&) const = default;
};

struct VolumeSegment {
    std::int64_t start_step = 0;
    double multiplier = 1.0;

    bool operator==(const VolumeSegment&) const = default;
};

struct TrafficConfig {
    double base_volume = 100.0;
    double noise_stddev = 0.0;
    std::vector<BudgetSegment> budget_schedule;
    std::vector<VolumeSegment> volume_schedule{{0, 1.0}};

    bool operator==(const TrafficConfig&) const = default;
};

struct TrafficSample {
    QueryVolume volume;
    Budget budget;
};

// Schedules must be non-empty, start at step 0, and have strictly increasing
// start steps. Throws ConfigError otherwise.
void validate_traffic(const TrafficConfig& config);

double budget_at(const TrafficConfig& config, std::int64_t step);
double volume_multiplier_at(const TrafficConfig& config, std::int64_t step);

// volume = max(0, base_volume * multiplier(step) + N(0, noise_stddev)).
// The noise draw happens even when noise_stddev is zero, so the rng stream
// advances identically whether or not a scenario uses noise.
TrafficSample generate_traffic(const TrafficConfig& config, std::int64_t step,
                               RandomStream& rng);

}  // namespace pricesim
