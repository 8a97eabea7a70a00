#include "pricesim/simulation.hpp"

#include <cctype>
#include <cmath>
#include <unordered_set>

#include "pricesim/errors.hpp"
#include "pricesim/random.hpp"

namespace pricesim {
namespace {

// Runtime counterpart of an AgentSpec.
using AgentInstance = std::variant<FixedAgent, StochasticAgent, BanditAgent>;

AgentInstance instantiate(const AgentSpec& spec, const PriceBounds& bounds,
                          std::uint64_t master_seed, std::size_t index) {
    // Stream 0 belongs to the traffic generator; agent i uses stream i + 1.
    RandomStream rng(substream_seed(master_seed, index + 1));
    if (const auto* fixed = std::get_if<FixedAgentSpec>(&spec)) {
        return FixedAgent{Price{fixed->price}};
    }
    if (const auto* stochastic = std::get_if<StochasticAgentSpec>(&spec)) {
        return StochasticAgent(stochastic->mean, stochastic->stddev, bounds, std::move(rng));
    }
    const auto& bandit = std::get<BanditAgentSpec>(spec);
    return BanditAgent(bandit.config, bounds, std::move(rng));
}

}  // namespace

const std::string& agent_label(const AgentSpec& spec) {
    return std::visit([](const auto& s) -> const std::string& { return s.label; }, spec);
}

bool agent_is_bandit(const AgentSpec& spec) {
    return std::holds_alternative<BanditAgentSpec>(spec);
}

void validate_scenario(const ScenarioConfig& config) {
    if (config.steps < 1) {
        throw ConfigError("steps must be >= 1");
    }
    if (config.snapshot_every < 1) {
        throw ConfigError("snapshotEvery must be >= 1");
    }
    if (!std::isfinite(config.price_bounds.floor) ||
        !std::isfinite(config.price_bounds.ceiling) || config.price_bounds.floor < 0.0 ||
        config.price_bounds.floor >= config.price_bounds.ceiling) {
        throw ConfigError("priceBounds must satisfy 0 <= floor < ceiling");
    }
    validate_traffic(config.traffic);
    validate_distributor(config.distributor);
    if (config.agents.empty()) {
        throw ConfigError("scenario needs at least one agent");
    }
    if (config.distributor.policy == DistributorPolicy::kSingleAgentThreshold &&
        config.agents.size() != 1) {
        throw ConfigError("singleAgentThreshold distributor requires exactly one agent");
    }
    std::unordered_set<std::string> labels;
    for (const AgentSpec& spec : config.agents) {
        const std::string& label = agent_label(spec);
        if (label.empty()) {
            throw ConfigError("agent labels must be non-empty");
        }
        // Labels become CSV column suffixes and plot file names.
        for (char c : label) {
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' &&
                c != '.') {
                throw ConfigError("agent label '" + label +
                                  "' may only contain letters, digits, '-', '_', '.'");
            }
        }
        if (!labels.insert(label).second) {
            throw ConfigError("duplicate agent label: " + label);
        }
        if (const auto* fixed = std::get_if<FixedAgentSpec>(&spec)) {
            if (!std::isfinite(fixed->price) || fixed->price < config.price_bounds.floor ||
                fixed->price > config.price_bounds.ceiling) {
                throw ConfigError("agent " + label + ": price must lie within priceBounds");
            }
        } else if (const auto* stochastic = std::get_if<StochasticAgentSpec>(&spec)) {
            if (!std::isfinite(stochastic->mean)) {
                throw ConfigError("agent " + label + ": mean must be finite");
            }
            if (!std::isfinite(stochastic->stddev) || stochastic->stddev < 0.0) {
                throw ConfigError("agent " + label + ": stddev must be >= 0");
            }
        } else {
            try {
                validate_bandit_config(std::get<BanditAgentSpec>(spec).config);
            } catch (const ConfigError& e) {
                throw ConfigError("agent " + label + ": " + e.what());
            }
        }
    }
}

std::vector<StepRecord> run_scenario(const ScenarioConfig& config) {
    validate_scenario(config);

    RandomStream traffic_rng(substream_seed(config.seed, 0));
    std::vector<AgentInstance> agents;
    agents.reserve(config.agents.size());
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
        agents.push_back(instantiate(config.agents[i], config.price_bounds, config.seed, i));
    }

    const std::size_t n = agents.size();
    std::vector<StepRecord> records;
    records.reserve(static_cast<std::size_t>(config.steps));
    std::vector<double> cumulative(n, 0.0);
    std::vector<Price> bids(n);

    for (std::int64_t t = 0; t < config.steps; ++t) {
        try {
            const TrafficSample traffic = generate_traffic(config.traffic, t, traffic_rng);

            // Simultaneous move: every agent bids before anyone learns.
            for (std::size_t i = 0; i < n; ++i) {
                bids[i] = std::visit(
                    [t](auto& agent) -> Price {
                        using T = std::decay_t<decltype(agent)>;
                        if constexpr (std::is_same_v<T, BanditAgent>) {
                            return agent.bid(t);
                        } else {
                            return agent.bid();
                        }
                    },
                    agents[i]);
            }

            const AllocationResult alloc =
                distribute(config.distributor, bids, traffic.budget, traffic.volume);

            StepRecord record;
            record.step = t;
            record.volume = traffic.volume.value;
            record.budget = traffic.budget.value;
            record.dropped = alloc.dropped;
            record.agents.resize(n);
            record.snapshots.resize(n);

            const bool snapshot_step =
                (t % config.snapshot_every == 0) || (t == config.steps - 1);

            for (std::size_t i = 0; i < n; ++i) {
                const Reward reward =
                    agent_revenue(bids[i], QueryVolume{alloc.served[i]});
                cumulative[i] += reward.value;
                record.agents[i] = AgentStepStats{bids[i].value, alloc.served[i],
                                                  reward.value, cumulative[i]};
                if (auto* bandit = std::get_if<BanditAgent>(&agents[i])) {
                    bandit->observe(reward);
                    bandit->learn();
                    if (snapshot_step) {
                        record.snapshots[i] = bandit->snapshot(t);
                    }
                }
            }
            records.push_back(std::move(record));
        } catch (const SimulationFault& e) {
            throw SimulationFault(std::string(e.what()) + " (step " + std::to_string(t) +
                                  ")");
        }
    }
    return records;
}

ScenarioSummary summarize(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                          double convergence_band) {
    if (records.empty()) {
        throw ConfigError("summarize requires at least one step record");
    }
    ScenarioSummary summary;
    summary.agents.resize(config.agents.size());
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
        summary.agents[i].label = agent_label(config.agents[i]);
        summary.agents[i].is_bandit = agent_is_bandit(config.agents[i]);
    }
    for (const StepRecord& record : records) {
        summary.total_volume += record.volume;
        summary.total_dropped += record.dropped;
        for (std::size_t i = 0; i < record.agents.size(); ++i) {
            summary.agents[i].total_served += record.agents[i].served;
            summary.agents[i].total_revenue += record.agents[i].reward;
            if (record.snapshots[i].has_value()) {
                summary.agents[i].final_snapshot = record.snapshots[i];
                // Candidate convergence step: earliest snapshot from which the
                // mean never leaves the band around the prevailing budget.
                auto& candidate = summary.agents[i].convergence_step;
                if (std::abs(record.snapshots[i]->mean - record.budget) <=
                    convergence_band) {
                    if (!candidate.has_value()) {
                        candidate = record.step;
                    }
                } else {
                    candidate.reset();
                }
            }
        }
    }
    return summary;
}

}  // namespace pricesim
