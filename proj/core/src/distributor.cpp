#include "pricesim/distributor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pricesim/errors.hpp"

namespace pricesim {
namespace {

std::vector<std::size_t> eligible_indices(std::span<const Price> bids, Budget budget) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (bids[i].value <= budget.value) {
            eligible.push_back(i);
        }
    }
    return eligible;
}

// Normalizes weights over the eligible set and assigns weight/total * volume.
void assign_shares(AllocationResult& result, const std::vector<std::size_t>& eligible,
                   const std::vector<double>& weights, double volume) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw SimulationFault("distributor weights did not sum to a positive finite value");
    }
    for (std::size_t k = 0; k < eligible.size(); ++k) {
        result.served[eligible[k]] = weights[k] / total * volume;
    }
}

}  // namespace

void validate_distributor(const DistributorConfig& config) {
    if (config.policy == DistributorPolicy::kSoftmaxNegPrice &&
        (!(config.temperature > 0.0) || !std::isfinite(config.temperature))) {
        throw ConfigError("softmaxNegPrice temperature must be finite and > 0");
    }
}

AllocationResult distribute(const DistributorConfig& config, std::span<const Price> bids,
                            Budget budget, QueryVolume volume) {
    if (bids.empty()) {
        throw ConfigError("distribute requires at least one bid");
    }
    if (config.policy == DistributorPolicy::kSingleAgentThreshold && bids.size() != 1) {
        throw ConfigError("singleAgentThreshold distributor requires exactly one bidder");
    }
    for (const Price& bid : bids) {
        if (!std::isfinite(bid.value) || bid.value < 0.0) {
            throw SimulationFault("bids must be finite and >= 0");
        }
    }
    if (!std::isfinite(volume.value) || volume.value < 0.0) {
        throw SimulationFault("volume must be finite and >= 0");
    }

    AllocationResult result;
    result.served.assign(bids.size(), 0.0);

    const std::vector<std::size_t> eligible = eligible_indices(bids, budget);
    if (eligible.empty()) {
        result.dropped = volume.value;
        return result;
    }

    switch (config.policy) {
        case DistributorPolicy::kSingleAgentThreshold:
        case DistributorPolicy::kBudgetFilteredUniform: {
            const double share = volume.value / static_cast<double>(eligible.size());
            for (std::size_t i : eligible) {
                result.served[i] = share;
            }
            break;
        }
        case DistributorPolicy::kInverseProportional: {
            std::vector<std::size_t> zero_bidders;
            for (std::size_t i : eligible) {
                if (bids[i].value == 0.0) {
                    zero_bidders.push_back(i);
                }
            }
            if (!zero_bidders.empty()) {
                // 1/p diverges at p = 0: free bidders take everything, split
                // evenly among themselves.
                const double share =
                    volume.value / static_cast<double>(zero_bidders.size());
                for (std::size_t i : zero_bidders) {
                    result.served[i] = share;
                }
                break;
            }
            std::vector<double> weights;
            weights.reserve(eligible.size());
            for (std::size_t i : eligible) {
                weights.push_back(1.0 / bids[i].value);
            }
            assign_shares(result, eligible, weights, volume.value);
            break;
        }
        case DistributorPolicy::kSoftmaxNegPrice: {
            double min_price = std::numeric_limits<double>::infinity();
            for (std::size_t i : eligible) {
                min_price = std::min(min_price, bids[i].value);
            }
            std::vector<double> weights;
            weights.reserve(eligible.size());
            for (std::size_t i : eligible) {
                weights.push_back(
                    std::exp(-(bids[i].value - min_price) / config.temperature));
            }
            assign_shares(result, eligible, weights, volume.value);
            break;
        }
    }
    return result;
}

}  // namespace pricesim
