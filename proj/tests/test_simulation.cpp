#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "pricesim/errors.hpp"
#include "pricesim/simulation.hpp"

using namespace pricesim;

namespace {

ScenarioConfig fixed_price_scenario(double price, double budget, std::int64_t steps) {
    ScenarioConfig cfg;
    cfg.steps = steps;
    cfg.seed = 0;
    cfg.price_bounds = {0.0, 2.0};
    cfg.traffic.base_volume = 100.0;
    cfg.traffic.noise_stddev = 0.0;
    cfg.traffic.budget_schedule = {{0, budget}};
    cfg.distributor.policy = DistributorPolicy::kSingleAgentThreshold;
    cfg.agents = {FixedAgentSpec{"anchor", price}};
    return cfg;
}

BanditAgentSpec small_bandit(const std::string& label, double mean, double stddev) {
    BanditAgentSpec spec;
    spec.label = label;
    spec.config.initial_params = {mean, std::log(stddev)};
    return spec;
}

}  // namespace

TEST_CASE("scenario validation names the offending rule") {
    auto cfg = fixed_price_scenario(0.5, 1.0, 10);
    CHECK_NOTHROW(validate_scenario(cfg));

    SUBCASE("steps") {
        cfg.steps = 0;
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("snapshot cadence") {
        cfg.snapshot_every = 0;
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("price bounds") {
        cfg.price_bounds = {1.0, 1.0};
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("no agents") {
        cfg.agents.clear();
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("single-agent distributor with two agents") {
        cfg.agents.push_back(FixedAgentSpec{"second", 0.4});
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("duplicate labels") {
        cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
        cfg.agents = {FixedAgentSpec{"same", 0.4}, FixedAgentSpec{"same", 0.6}};
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("label charset") {
        cfg.agents = {FixedAgentSpec{"bad label", 0.4}};
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("empty label") {
        cfg.agents = {FixedAgentSpec{"", 0.4}};
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("fixed price outside bounds") {
        cfg.agents = {FixedAgentSpec{"anchor", 3.0}};
        CHECK_THROWS_AS(validate_scenario(cfg), ConfigError);
    }
    SUBCASE("stochastic stddev") {
        cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
        cfg.agents = {StochasticAgentSpec{"noisy", 0.5, -0.2}};
        try {
            validate_scenario(cfg);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("noisy") != std::string::npos);
        }
    }
    SUBCASE("bandit hyperparameters") {
        cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
        auto bandit = small_bandit("learner", 0.5, 0.3);
        bandit.config.learning_rate = -1.0;
        cfg.agents = {bandit};
        try {
            validate_scenario(cfg);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("learner") != std::string::npos);
            CHECK(msg.find("learningRate") != std::string::npos);
        }
    }
}

TEST_CASE("a fixed agent under budget collects price times volume every step") {
    const auto cfg = fixed_price_scenario(0.5, 1.0, 10);
    const auto records = run_scenario(cfg);
    REQUIRE(records.size() == 10);
    for (std::size_t t = 0; t < records.size(); ++t) {
        const auto& r = records[t];
        CHECK(r.step == static_cast<std::int64_t>(t));
        CHECK(r.volume == 100.0);
        CHECK(r.budget == 1.0);
        CHECK(r.dropped == 0.0);
        REQUIRE(r.agents.size() == 1);
        CHECK(r.agents[0].bid == 0.5);
        CHECK(r.agents[0].served == 100.0);
        CHECK(r.agents[0].reward == 50.0);
        CHECK(r.agents[0].cumulative_revenue ==
              doctest::Approx(50.0 * static_cast<double>(t + 1)));
        CHECK_FALSE(r.snapshots[0].has_value());  // not a bandit
    }
}

TEST_CASE("a fixed agent above budget serves nothing and everything drops") {
    const auto cfg = fixed_price_scenario(1.5, 1.0, 5);
    const auto records = run_scenario(cfg);
    for (const auto& r : records) {
        CHECK(r.dropped == 100.0);
        CHECK(r.agents[0].served == 0.0);
        CHECK(r.agents[0].reward == 0.0);
    }
}

TEST_CASE("runs are deterministic for a fixed config") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 60);
    cfg.traffic.noise_stddev = 10.0;
    cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    cfg.agents = {FixedAgentSpec{"anchor", 0.5}, StochasticAgentSpec{"noisy", 0.6, 0.2},
                  small_bandit("learner", 0.5, 0.3)};
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    CHECK(a == b);
}

TEST_CASE("changing the seed changes trajectories") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 30);
    cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    cfg.agents = {small_bandit("learner", 0.5, 0.3)};
    auto other = cfg;
    other.seed = 1;
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(other);
    bool any_difference = false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].agents[0].bid != b[t].agents[0].bid) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("agents draw from independent substreams") {
    // Appending an agent must not perturb the traffic realization or the
    // draws of agents that were already there.
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 40);
    cfg.traffic.noise_stddev = 10.0;
    cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    cfg.agents = {StochasticAgentSpec{"noisy", 0.6, 0.2}};

    auto extended = cfg;
    extended.agents.push_back(small_bandit("learner", 0.5, 0.3));

    const auto base = run_scenario(cfg);
    const auto more = run_scenario(extended);
    for (std::size_t t = 0; t < base.size(); ++t) {
        CHECK(base[t].volume == more[t].volume);
        CHECK(base[t].agents[0].bid == more[t].agents[0].bid);
    }
}

TEST_CASE("structural invariants hold across 100 random seeds") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 0.8, 20);
    cfg.traffic.noise_stddev = 20.0;
    cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    cfg.agents = {FixedAgentSpec{"anchor", 0.5}, StochasticAgentSpec{"noisy", 0.8, 0.3},
                  small_bandit("learner", 0.6, 0.3)};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.seed = seed;
        const auto records = run_scenario(cfg);
        for (const auto& r : records) {
            double served_sum = 0.0;
            for (const auto& a : r.agents) {
                served_sum += a.served;
                if (a.served > 0.0) REQUIRE(a.bid <= r.budget);
                REQUIRE(a.bid >= cfg.price_bounds.floor);
                REQUIRE(a.bid <= cfg.price_bounds.ceiling);
            }
            REQUIRE(served_sum + r.dropped ==
                    doctest::Approx(r.volume).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("snapshots follow the cadence and always include the final step") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 25);
    cfg.snapshot_every = 10;
    cfg.distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    cfg.agents = {FixedAgentSpec{"anchor", 0.5}, small_bandit("learner", 0.5, 0.3)};
    const auto records = run_scenario(cfg);
    for (const auto& r : records) {
        CHECK_FALSE(r.snapshots[0].has_value());  // fixed agent: never
        const bool expected = (r.step % 10 == 0) || (r.step == 24);
        CHECK(r.snapshots[1].has_value() == expected);
        if (r.snapshots[1]) CHECK(r.snapshots[1]->step == r.step);
    }
}

TEST_CASE("budget schedule switches mid-run") {
    auto cfg = fixed_price_scenario(0.5, 1.0, 10);
    cfg.traffic.budget_schedule = {{0, 1.0}, {5, 0.4}};
    const auto records = run_scenario(cfg);
    for (const auto& r : records) {
        CHECK(r.budget == (r.step < 5 ? 1.0 : 0.4));
        // price 0.5 clears budget 1.0 but not 0.4
        CHECK(r.agents[0].reward == (r.step < 5 ? 50.0 : 0.0));
    }
}

TEST_CASE("a bandit backs away from prices the budget rejects") {
    // Initial mean above the budget: ~69% of bids are rejected for zero
    // reward, so the mean must come down toward the paying region.
    ScenarioConfig cfg = fixed_price_scenario(0.5, 0.8, 250);
    cfg.agents = {small_bandit("learner", 0.9, 0.2)};
    const auto records = run_scenario(cfg);
    const auto& final_snapshot = records.back().snapshots[0];
    REQUIRE(final_snapshot.has_value());
    CHECK(final_snapshot->mean < 0.85);
    CHECK(final_snapshot->mean > 0.3);
}

TEST_CASE("simulation faults carry the failing step") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 10);
    auto bandit = small_bandit("learner", 0.5, 0.3);
    bandit.config.learning_rate = 1e300;
    cfg.agents = {bandit};
    try {
        run_scenario(cfg);
        FAIL("expected SimulationFault");
    } catch (const SimulationFault& e) {
        CHECK(std::string(e.what()).find("(step ") != std::string::npos);
    }
}

TEST_CASE("summarize aggregates totals and convergence") {
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 12);
    const auto records = run_scenario(cfg);
    const auto summary = summarize(cfg, records);
    REQUIRE(summary.agents.size() == 1);
    CHECK(summary.total_volume == doctest::Approx(1200.0));
    CHECK(summary.total_dropped == 0.0);
    CHECK(summary.agents[0].label == "anchor");
    CHECK_FALSE(summary.agents[0].is_bandit);
    CHECK(summary.agents[0].total_served == doctest::Approx(1200.0));
    CHECK(summary.agents[0].total_revenue == doctest::Approx(600.0));
    CHECK_FALSE(summary.agents[0].convergence_step.has_value());

    CHECK_THROWS_AS(summarize(cfg, {}), ConfigError);
}

TEST_CASE("convergence step marks the point the mean enters the band for good") {
    // Build records by hand: a bandit whose mean reaches the budget band at
    // step 3, leaves at step 6, and re-enters at step 8 for the rest.
    ScenarioConfig cfg = fixed_price_scenario(0.5, 1.0, 10);
    cfg.agents = {small_bandit("learner", 0.5, 0.3)};
    std::vector<StepRecord> records;
    const double means[] = {0.3, 0.5, 0.7, 0.95, 0.97, 0.96, 0.7, 0.8, 0.93, 0.94};
    for (std::int64_t t = 0; t < 10; ++t) {
        StepRecord r;
        r.step = t;
        r.volume = 100.0;
        r.budget = 1.0;
        r.agents = {AgentStepStats{means[t], 100.0, 50.0, 50.0 * static_cast<double>(t + 1)}};
        r.snapshots = {PolicySnapshot{means[t], 0.05, t}};
        records.push_back(r);
    }
    const auto summary = summarize(cfg, records, 0.1);
    REQUIRE(summary.agents[0].convergence_step.has_value());
    CHECK(*summary.agents[0].convergence_step == 8);
}
