#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pricesim/agents.hpp"
#include "pricesim/distributor.hpp"
#include "pricesim/market.hpp"
#include "pricesim/policy.hpp"
#include "pricesim/traffic.hpp"

namespace pricesim {

struct FixedAgentSpec {
    std::string label;
    double price = 0.0;

    bool operator==(const FixedAgentSpec&) const = default;
};

struct StochasticAgentSpec {
    std::string label;
    double mean = 0.0;
    double stddev = 0.0;

    bool operator==(const StochasticAgentSpec&) const = default;
};

struct BanditAgentSpec {
    std::string label;
    BanditConfig config;

    bool operator==(const BanditAgentSpec&) const = default;
};

using AgentSpec = std::variant<FixedAgentSpec, StochasticAgentSpec, BanditAgentSpec>;

const std::string& agent_label(const AgentSpec& spec);
bool agent_is_bandit(const AgentSpec& spec);

struct ScenarioConfig {
    std::int64_t steps = 1000;
    std::uint64_t seed = 0;
    std::int64_t snapshot_every = 1;
    PriceBounds price_bounds;
    TrafficConfig traffic;
    DistributorConfig distributor;
    std::vector<AgentSpec> agents;

    bool operator==(const ScenarioConfig&) const = default;
};

// Full static validation; throws ConfigError naming the violated rule.
// run_scenario calls it, so faults surface before step 0.
void validate_scenario(const ScenarioConfig& config);

struct AgentStepStats {
    double bid = 0.0;
    double served = 0.0;
    double reward = 0.0;
    double cumulative_revenue = 0.0;

    bool operator==(const AgentStepStats&) const = default;
};

struct StepRecord {
    std::int64_t step = 0;
    double volume = 0.0;
    double budget = 0.0;
    double dropped = 0.0;
    std::vector<AgentStepStats> agents;  // declaration order
    // Aligned with agents; engaged only for bandits on snapshot steps, and
    // taken after that step's learning update.
    std::vector<std::optional<PolicySnapshot>> snapshots;

    bool operator==(const StepRecord&) const = default;
};

// One record per step t in [0, steps). Deterministic for a given config: the
// traffic generator and every agent draw from their own substream of the
// master seed, so the agent list can change without perturbing anyone else.
std::vector<StepRecord> run_scenario(const ScenarioConfig& config);

struct AgentSummary {
    std::string label;
    bool is_bandit = false;
    double total_served = 0.0;
    double total_revenue = 0.0;
    std::optional<PolicySnapshot> final_snapshot;
    // First step from which |policy mean - budget| stays within the band for
    // the rest of the run (bandits with at least one snapshot only).
    std::optional<std::int64_t> convergence_step;

    bool operator==(const AgentSummary&) const = default;
};

struct ScenarioSummary {
    double total_volume = 0.0;
    double total_dropped = 0.0;
    std::vector<AgentSummary> agents;

    bool operator==(const ScenarioSummary&) const = default;
};

ScenarioSummary summarize(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                          double convergence_band = 0.1);

}  // namespace pricesim
