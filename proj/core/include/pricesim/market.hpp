#pragma once

namespace pricesim {

// Price bid in budget units per query. Nonnegative.
struct Price {
    double value = 0.0;
    bool operator==(const Price&) const = default;
};

// Per-query consumer budget. One scalar budget applies to a whole step's
// volume; bids above it receive nothing.
struct Budget {
    double value = 0.0;
    bool operator==(const Budget&) const = default;
};

// Aggregate query volume for one step. Real-valued: distributors allocate
// fractionally.
struct QueryVolume {
    double value = 0.0;
    bool operator==(const QueryVolume&) const = default;
};

// Revenue flow for one step, in budget units. Serving cost is zero, so
// rewards are never negative.
struct Reward {
    double value = 0.0;
    bool operator==(const Reward&) const = default;
};

// Closed price interval [floor, ceiling] that every emitted bid is clamped to.
struct PriceBounds {
    double floor = 0.0;
    double ceiling = 1.0;

    double clamp(double x) const {
        if (x < floor) return floor;
        if (x > ceiling) return ceiling;
        return x;
    }

    bool operator==(const PriceBounds&) const = default;
};

// Reward in the single-agent threshold market: the full volume pays the bid
// price per query iff the bid is within budget. The boundary price == budget
// still pays.
Reward single_agent_reward(Price price, Budget budget, QueryVolume volume);

// Realized revenue once a distributor has fixed the served volume.
Reward agent_revenue(Price price, QueryVolume served);

}  // namespace pricesim
