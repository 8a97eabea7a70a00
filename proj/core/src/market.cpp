#include "pricesim/market.hpp"

namespace pricesim {

Reward single_agent_reward(Price price, Budget budget, QueryVolume volume) {
    if (price.value <= budget.value) {
        return Reward{price.value * volume.value};
    }
    return Reward{0.0};
}

Reward agent_revenue(Price price, QueryVolume served) {
    return Reward{price.value * served.value};
}

}  // namespace pricesim
