#pragma once

#include <span>
#include <vector>

#include "pricesim/market.hpp"

namespace pricesim {

enum class DistributorPolicy {
    // Exactly one bidder; it takes the whole volume iff its bid clears the
    // budget, otherwise everything is dropped.
    kSingleAgentThreshold,
    // Volume split evenly across the bidders at or under the budget.
    kBudgetFilteredUniform,
    // Shares proportional to 1/price across eligible bidders; zero-price
    // bidders, if any, split the whole volume evenly among themselves.
    kInverseProportional,
    // Shares proportional to exp(-(price - min_price) / temperature) across
    // eligible bidders: cheaper bids win more, with softness set by the
    // temperature.
    kSoftmaxNegPrice,
};

struct DistributorConfig {
    DistributorPolicy policy = DistributorPolicy::kBudgetFilteredUniform;
    double temperature = 0.25;  // only used by kSoftmaxNegPrice

    bool operator==(const DistributorConfig&) const = default;
};

// served is aligned with the input bid order; dropped is the volume no
// eligible bidder absorbed. served sums with dropped back to the input
// volume (up to floating-point roundoff).
struct AllocationResult {
    std::vector<double> served;
    double dropped = 0.0;
};

void validate_distributor(const DistributorConfig& config);

// Bidders with bid > budget are ineligible and serve nothing. If nobody is
// eligible the whole volume is dropped.
AllocationResult distribute(const DistributorConfig& config, std::span<const Price> bids,
                            Budget budget, QueryVolume volume);

}  // namespace pricesim
