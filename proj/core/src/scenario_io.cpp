#include "pricesim/scenario_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "pricesim/errors.hpp"

namespace pricesim {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

void expect_object(const Json& value, const std::string& path) {
    if (!value.is_object()) {
        fail(path, "expected a JSON object");
    }
}

void expect_array(const Json& value, const std::string& path) {
    if (!value.is_array()) {
        fail(path, "expected a JSON array");
    }
}

void reject_unknown(const Json& object, const std::string& path,
                    std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (std::string_view candidate : allowed) {
            if (key == candidate) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

double as_double(const Json& value, const std::string& path) {
    if (!value.is_number()) {
        fail(path, "expected a number");
    }
    return value.get<double>();
}

std::int64_t as_int(const Json& value, const std::string& path) {
    if (!value.is_number_integer()) {
        fail(path, "expected an integer");
    }
    return value.get<std::int64_t>();
}

std::uint64_t as_uint(const Json& value, const std::string& path) {
    if (value.is_number_unsigned()) {
        return value.get<std::uint64_t>();
    }
    if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(value.get<std::int64_t>());
    }
    fail(path, "expected a nonnegative integer");
}

bool as_bool(const Json& value, const std::string& path) {
    if (!value.is_boolean()) {
        fail(path, "expected a boolean");
    }
    return value.get<bool>();
}

std::string as_string(const Json& value, const std::string& path) {
    if (!value.is_string()) {
        fail(path, "expected a string");
    }
    return value.get<std::string>();
}

const Json& member(const Json& object, const char* key, const std::string& path) {
    if (!object.contains(key)) {
        fail(path + "." + key, "required");
    }
    return object.at(key);
}

std::string fmt_g9(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// --- scenario parsing ------------------------------------------------------

struct DefaultsLog {
    std::vector<std::string>* notes;

    void record(const std::string& field, const std::string& value) const {
        notes->push_back(field + " = " + value + " (default)");
    }
};

TrafficConfig parse_traffic(const Json& doc, const DefaultsLog& defaults) {
    TrafficConfig traffic;
    if (!doc.contains("traffic")) {
        fail("traffic", "required (must provide at least budgetSchedule)");
    }
    const Json& node = doc.at("traffic");
    expect_object(node, "traffic");
    reject_unknown(node, "traffic",
                   {"baseVolume", "noiseStddev", "budgetSchedule", "volumeSchedule"});

    if (node.contains("baseVolume")) {
        traffic.base_volume = as_double(node.at("baseVolume"), "traffic.baseVolume");
    } else {
        defaults.record("traffic.baseVolume", fmt_g9(traffic.base_volume));
    }
    if (node.contains("noiseStddev")) {
        traffic.noise_stddev = as_double(node.at("noiseStddev"), "traffic.noiseStddev");
    } else {
        defaults.record("traffic.noiseStddev", fmt_g9(traffic.noise_stddev));
    }

    if (!node.contains("budgetSchedule")) {
        fail("traffic.budgetSchedule", "required");
    }
    const Json& budget_node = node.at("budgetSchedule");
    expect_array(budget_node, "traffic.budgetSchedule");
    traffic.budget_schedule.clear();
    for (std::size_t i = 0; i < budget_node.size(); ++i) {
        const std::string path = "traffic.budgetSchedule[" + std::to_string(i) + "]";
        const Json& seg = budget_node.at(i);
        expect_object(seg, path);
        reject_unknown(seg, path, {"fromStep", "budget"});
        if (!seg.contains("fromStep")) {
            fail(path + ".fromStep", "required");
        }
        if (!seg.contains("budget")) {
            fail(path + ".budget", "required");
        }
        traffic.budget_schedule.push_back(
            BudgetSegment{as_int(seg.at("fromStep"), path + ".fromStep"),
                          as_double(seg.at("budget"), path + ".budget")});
    }

    if (node.contains("volumeSchedule")) {
        const Json& volume_node = node.at("volumeSchedule");
        expect_array(volume_node, "traffic.volumeSchedule");
        traffic.volume_schedule.clear();
        for (std::size_t i = 0; i < volume_node.size(); ++i) {
            const std::string path = "traffic.volumeSchedule[" + std::to_string(i) + "]";
            const Json& seg = volume_node.at(i);
            expect_object(seg, path);
            reject_unknown(seg, path, {"fromStep", "multiplier"});
            if (!seg.contains("fromStep")) {
                fail(path + ".fromStep", "required");
            }
            if (!seg.contains("multiplier")) {
                fail(path + ".multiplier", "required");
            }
            traffic.volume_schedule.push_back(
                VolumeSegment{as_int(seg.at("fromStep"), path + ".fromStep"),
                              as_double(seg.at("multiplier"), path + ".multiplier")});
        }
    } else {
        defaults.record("traffic.volumeSchedule", "[{fromStep 0, multiplier 1}]");
    }
    return traffic;
}

DistributorConfig parse_distributor(const Json& doc, const DefaultsLog& defaults) {
    DistributorConfig distributor;
    if (!doc.contains("distributor")) {
        defaults.record("distributor.kind", "budgetFilteredUniform");
        return distributor;
    }
    const Json& node = doc.at("distributor");
    expect_object(node, "distributor");
    reject_unknown(node, "distributor", {"kind", "temperature"});
    if (!node.contains("kind")) {
        fail("distributor.kind", "required");
    }
    const std::string kind = as_string(node.at("kind"), "distributor.kind");
    if (kind == "singleAgentThreshold") {
        distributor.policy = DistributorPolicy::kSingleAgentThreshold;
    } else if (kind == "budgetFilteredUniform") {
        distributor.policy = DistributorPolicy::kBudgetFilteredUniform;
    } else if (kind == "inverseProportional") {
        distributor.policy = DistributorPolicy::kInverseProportional;
    } else if (kind == "softmaxNegPrice") {
        distributor.policy = DistributorPolicy::kSoftmaxNegPrice;
    } else {
        fail("distributor.kind", "unknown distributor kind '" + kind + "'");
    }

    if (distributor.policy == DistributorPolicy::kSoftmaxNegPrice) {
        if (node.contains("temperature")) {
            distributor.temperature =
                as_double(node.at("temperature"), "distributor.temperature");
        } else {
            defaults.record("distributor.temperature", fmt_g9(distributor.temperature));
        }
    } else if (node.contains("temperature")) {
        fail("distributor.temperature", "only applies to softmaxNegPrice");
    }
    return distributor;
}

AgentSpec parse_agent(const Json& node, const std::string& path, const DefaultsLog& defaults) {
    expect_object(node, path);
    if (!node.contains("kind")) {
        fail(path + ".kind", "required");
    }
    const std::string kind = as_string(node.at("kind"), path + ".kind");
    if (!node.contains("label")) {
        fail(path + ".label", "required");
    }
    const std::string label = as_string(node.at("label"), path + ".label");

    if (kind == "deterministic") {
        reject_unknown(node, path, {"kind", "label", "price"});
        if (!node.contains("price")) {
            fail(path + ".price", "required");
        }
        return FixedAgentSpec{label, as_double(node.at("price"), path + ".price")};
    }
    if (kind == "stochastic") {
        reject_unknown(node, path, {"kind", "label", "mean", "stddev"});
        if (!node.contains("mean")) {
            fail(path + ".mean", "required");
        }
        if (!node.contains("stddev")) {
            fail(path + ".stddev", "required");
        }
        const double stddev = as_double(node.at("stddev"), path + ".stddev");
        if (!(stddev >= 0.0)) {
            fail(path + ".stddev", "must be >= 0");
        }
        return StochasticAgentSpec{label, as_double(node.at("mean"), path + ".mean"), stddev};
    }
    if (kind != "bandit") {
        fail(path + ".kind", "unknown agent kind '" + kind + "'");
    }

    reject_unknown(node, path,
                   {"kind", "label", "updateRule", "initialMean", "initialStddev",
                    "learningRate", "clipEpsilon", "bufferCapacity", "epochsPerUpdate",
                    "baselineDecay", "pullRate", "noRewardWindow", "logSpace"});
    BanditConfig config;
    if (!node.contains("updateRule")) {
        fail(path + ".updateRule", "required");
    }
    const std::string rule = as_string(node.at("updateRule"), path + ".updateRule");
    if (rule == "vanillaPG") {
        config.update_rule = UpdateRule::kVanillaPg;
    } else if (rule == "ppoClear") {
        config.update_rule = UpdateRule::kPpoClear;
    } else if (rule == "ppoRolling") {
        config.update_rule = UpdateRule::kPpoRolling;
    } else {
        fail(path + ".updateRule", "unknown update rule '" + rule + "'");
    }

    if (!node.contains("initialMean")) {
        fail(path + ".initialMean", "required");
    }
    if (!node.contains("initialStddev")) {
        fail(path + ".initialStddev", "required");
    }
    config.initial_params.mean = as_double(node.at("initialMean"), path + ".initialMean");
    const double initial_stddev =
        as_double(node.at("initialStddev"), path + ".initialStddev");
    if (!(initial_stddev > 0.0)) {
        fail(path + ".initialStddev", "must be > 0");
    }
    config.initial_params.scale_param = std::log(initial_stddev);

    const auto number_or_default = [&](const char* key, double& slot) {
        if (node.contains(key)) {
            slot = as_double(node.at(key), path + "." + key);
        } else {
            defaults.record(path + "." + key, fmt_g9(slot));
        }
    };
    number_or_default("learningRate", config.learning_rate);
    number_or_default("clipEpsilon", config.clip_epsilon);
    number_or_default("baselineDecay", config.baseline_decay);
    number_or_default("pullRate", config.pull_rate);

    if (node.contains("bufferCapacity")) {
        const std::int64_t capacity =
            as_int(node.at("bufferCapacity"), path + ".bufferCapacity");
        if (capacity < 1) {
            fail(path + ".bufferCapacity", "must be >= 1");
        }
        config.buffer_capacity = static_cast<std::size_t>(capacity);
    } else {
        defaults.record(path + ".bufferCapacity", std::to_string(config.buffer_capacity));
    }
    if (node.contains("epochsPerUpdate")) {
        config.epochs_per_update = static_cast<int>(
            as_int(node.at("epochsPerUpdate"), path + ".epochsPerUpdate"));
    } else {
        defaults.record(path + ".epochsPerUpdate",
                        std::to_string(config.epochs_per_update));
    }
    if (node.contains("noRewardWindow")) {
        config.no_reward_window =
            static_cast<int>(as_int(node.at("noRewardWindow"), path + ".noRewardWindow"));
    } else {
        defaults.record(path + ".noRewardWindow", std::to_string(config.no_reward_window));
    }
    if (node.contains("logSpace")) {
        config.log_space = as_bool(node.at("logSpace"), path + ".logSpace");
    } else {
        defaults.record(path + ".logSpace", config.log_space ? "true" : "false");
    }
    return BanditAgentSpec{label, config};
}

// --- serialization ---------------------------------------------------------

std::string update_rule_name(UpdateRule rule) {
    switch (rule) {
        case UpdateRule::kVanillaPg:
            return "vanillaPG";
        case UpdateRule::kPpoClear:
            return "ppoClear";
        case UpdateRule::kPpoRolling:
            return "ppoRolling";
    }
    throw ConfigError("invalid update rule value");
}

std::string distributor_kind_name(DistributorPolicy policy) {
    switch (policy) {
        case DistributorPolicy::kSingleAgentThreshold:
            return "singleAgentThreshold";
        case DistributorPolicy::kBudgetFilteredUniform:
            return "budgetFilteredUniform";
        case DistributorPolicy::kInverseProportional:
            return "inverseProportional";
        case DistributorPolicy::kSoftmaxNegPrice:
            return "softmaxNegPrice";
    }
    throw ConfigError("invalid distributor kind value");
}

Json agent_to_json(const AgentSpec& spec) {
    Json node;
    if (const auto* fixed = std::get_if<FixedAgentSpec>(&spec)) {
        node["kind"] = "deterministic";
        node["label"] = fixed->label;
        node["price"] = fixed->price;
        return node;
    }
    if (const auto* stochastic = std::get_if<StochasticAgentSpec>(&spec)) {
        node["kind"] = "stochastic";
        node["label"] = stochastic->label;
        node["mean"] = stochastic->mean;
        node["stddev"] = stochastic->stddev;
        return node;
    }
    const auto& bandit = std::get<BanditAgentSpec>(spec);
    node["kind"] = "bandit";
    node["label"] = bandit.label;
    node["updateRule"] = update_rule_name(bandit.config.update_rule);
    node["initialMean"] = bandit.config.initial_params.mean;
    node["initialStddev"] = bandit.config.initial_params.stddev();
    node["learningRate"] = bandit.config.learning_rate;
    node["clipEpsilon"] = bandit.config.clip_epsilon;
    node["bufferCapacity"] = bandit.config.buffer_capacity;
    node["epochsPerUpdate"] = bandit.config.epochs_per_update;
    node["baselineDecay"] = bandit.config.baseline_decay;
    node["pullRate"] = bandit.config.pull_rate;
    node["noRewardWindow"] = bandit.config.no_reward_window;
    node["logSpace"] = bandit.config.log_space;
    return node;
}

}  // namespace

ParsedScenario parse_scenario(const std::string& json_text) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    expect_object(doc, "document");
    reject_unknown(doc, "",
                   {"schemaVersion", "steps", "seed", "snapshotEvery", "priceBounds",
                    "traffic", "distributor", "agents"});

    ParsedScenario out;
    DefaultsLog defaults{&out.applied_defaults};
    ScenarioConfig& config = out.config;

    if (doc.contains("schemaVersion")) {
        if (as_int(doc.at("schemaVersion"), "schemaVersion") != kScenarioSchemaVersion) {
            fail("schemaVersion",
                 "unsupported version (expected " + std::to_string(kScenarioSchemaVersion) +
                     ")");
        }
    } else {
        defaults.record("schemaVersion", std::to_string(kScenarioSchemaVersion));
    }

    if (doc.contains("steps")) {
        config.steps = as_int(doc.at("steps"), "steps");
    } else {
        defaults.record("steps", std::to_string(config.steps));
    }
    if (doc.contains("seed")) {
        config.seed = as_uint(doc.at("seed"), "seed");
    } else {
        defaults.record("seed", std::to_string(config.seed));
    }
    if (doc.contains("snapshotEvery")) {
        config.snapshot_every = as_int(doc.at("snapshotEvery"), "snapshotEvery");
    } else {
        defaults.record("snapshotEvery", std::to_string(config.snapshot_every));
    }

    if (doc.contains("priceBounds")) {
        const Json& node = doc.at("priceBounds");
        expect_object(node, "priceBounds");
        reject_unknown(node, "priceBounds", {"floor", "ceiling"});
        if (!node.contains("floor")) {
            fail("priceBounds.floor", "required");
        }
        if (!node.contains("ceiling")) {
            fail("priceBounds.ceiling", "required");
        }
        config.price_bounds.floor = as_double(node.at("floor"), "priceBounds.floor");
        config.price_bounds.ceiling = as_double(node.at("ceiling"), "priceBounds.ceiling");
    } else {
        defaults.record("priceBounds", "{floor 0, ceiling 1}");
    }

    config.traffic = parse_traffic(doc, defaults);
    config.distributor = parse_distributor(doc, defaults);

    if (!doc.contains("agents")) {
        fail("agents", "required");
    }
    const Json& agents_node = doc.at("agents");
    expect_array(agents_node, "agents");
    for (std::size_t i = 0; i < agents_node.size(); ++i) {
        config.agents.push_back(parse_agent(agents_node.at(i),
                                            "agents[" + std::to_string(i) + "]", defaults));
    }

    validate_scenario(config);
    return out;
}

ParsedScenario load_scenario_file(const std::string& path) {
    try {
        return parse_scenario(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string serialize_scenario(const ScenarioConfig& config) {
    Json doc;
    doc["schemaVersion"] = kScenarioSchemaVersion;
    doc["steps"] = config.steps;
    doc["seed"] = config.seed;
    doc["snapshotEvery"] = config.snapshot_every;
    doc["priceBounds"] = {{"floor", config.price_bounds.floor},
                          {"ceiling", config.price_bounds.ceiling}};
    Json traffic;
    traffic["baseVolume"] = config.traffic.base_volume;
    traffic["noiseStddev"] = config.traffic.noise_stddev;
    Json budget_schedule = Json::array();
    for (const BudgetSegment& seg : config.traffic.budget_schedule) {
        budget_schedule.push_back({{"fromStep", seg.start_step}, {"budget", seg.budget}});
    }
    traffic["budgetSchedule"] = std::move(budget_schedule);
    Json volume_schedule = Json::array();
    for (const VolumeSegment& seg : config.traffic.volume_schedule) {
        volume_schedule.push_back(
            {{"fromStep", seg.start_step}, {"multiplier", seg.multiplier}});
    }
    traffic["volumeSchedule"] = std::move(volume_schedule);
    doc["traffic"] = std::move(traffic);

    Json distributor;
    distributor["kind"] = distributor_kind_name(config.distributor.policy);
    if (config.distributor.policy == DistributorPolicy::kSoftmaxNegPrice) {
        distributor["temperature"] = config.distributor.temperature;
    }
    doc["distributor"] = std::move(distributor);

    Json agents = Json::array();
    for (const AgentSpec& spec : config.agents) {
        agents.push_back(agent_to_json(spec));
    }
    doc["agents"] = std::move(agents);
    return doc.dump(2) + "\n";
}

std::string metrics_csv(const ScenarioConfig& config, const std::vector<StepRecord>& records) {
    std::ostringstream out;
    out << "step,volume,budget,dropped";
    for (const AgentSpec& spec : config.agents) {
        const std::string& label = agent_label(spec);
        out << ",bid_" << label << ",served_" << label << ",reward_" << label << ",cumrev_"
            << label << ",mean_" << label << ",stddev_" << label;
    }
    out << "\n";
    for (const StepRecord& record : records) {
        if (record.agents.size() != config.agents.size()) {
            throw ConfigError("step records do not match the scenario's agent count");
        }
        out << record.step << ',' << fmt_g9(record.volume) << ',' << fmt_g9(record.budget)
            << ',' << fmt_g9(record.dropped);
        for (std::size_t i = 0; i < record.agents.size(); ++i) {
            const AgentStepStats& stats = record.agents[i];
            out << ',' << fmt_g9(stats.bid) << ',' << fmt_g9(stats.served) << ','
                << fmt_g9(stats.reward) << ',' << fmt_g9(stats.cumulative_revenue);
            if (record.snapshots[i].has_value()) {
                out << ',' << fmt_g9(record.snapshots[i]->mean) << ','
                    << fmt_g9(record.snapshots[i]->stddev);
            } else {
                out << ",,";
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string records_ndjson(const std::vector<StepRecord>& records) {
    std::ostringstream out;
    for (const StepRecord& record : records) {
        Json row;
        row["step"] = record.step;
        row["volume"] = record.volume;
        row["budget"] = record.budget;
        row["dropped"] = record.dropped;
        Json agents = Json::array();
        for (std::size_t i = 0; i < record.agents.size(); ++i) {
            const AgentStepStats& stats = record.agents[i];
            Json node;
            node["bid"] = stats.bid;
            node["served"] = stats.served;
            node["reward"] = stats.reward;
            node["cumrev"] = stats.cumulative_revenue;
            if (record.snapshots[i].has_value()) {
                node["snapshot"] = {{"mean", record.snapshots[i]->mean},
                                    {"stddev", record.snapshots[i]->stddev},
                                    {"step", record.snapshots[i]->step}};
            }
            agents.push_back(std::move(node));
        }
        row["agents"] = std::move(agents);
        out << row.dump() << "\n";
    }
    return out.str();
}

std::vector<StepRecord> parse_records_ndjson(const std::string& text) {
    std::vector<StepRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string where = "records line " + std::to_string(line_no);
        Json row;
        try {
            row = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ConfigError(where + ": invalid JSON: " + e.what());
        }
        expect_object(row, where);
        reject_unknown(row, where, {"step", "volume", "budget", "dropped", "agents"});
        StepRecord record;
        record.step = as_int(member(row, "step", where), where + ".step");
        record.volume = as_double(member(row, "volume", where), where + ".volume");
        record.budget = as_double(member(row, "budget", where), where + ".budget");
        record.dropped = as_double(member(row, "dropped", where), where + ".dropped");
        const Json& agents = member(row, "agents", where);
        expect_array(agents, where + ".agents");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const std::string path = where + ".agents[" + std::to_string(i) + "]";
            const Json& node = agents.at(i);
            expect_object(node, path);
            reject_unknown(node, path, {"bid", "served", "reward", "cumrev", "snapshot"});
            record.agents.push_back(
                AgentStepStats{as_double(member(node, "bid", path), path + ".bid"),
                               as_double(member(node, "served", path), path + ".served"),
                               as_double(member(node, "reward", path), path + ".reward"),
                               as_double(member(node, "cumrev", path), path + ".cumrev")});
            if (node.contains("snapshot")) {
                const Json& snap = node.at("snapshot");
                expect_object(snap, path + ".snapshot");
                reject_unknown(snap, path + ".snapshot", {"mean", "stddev", "step"});
                record.snapshots.push_back(PolicySnapshot{
                    as_double(member(snap, "mean", path + ".snapshot"),
                              path + ".snapshot.mean"),
                    as_double(member(snap, "stddev", path + ".snapshot"),
                              path + ".snapshot.stddev"),
                    as_int(member(snap, "step", path + ".snapshot"),
                           path + ".snapshot.step")});
            } else {
                record.snapshots.push_back(std::nullopt);
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<StepRecord> load_records_ndjson(const std::string& path) {
    return parse_records_ndjson(read_file(path));
}

void write_metrics(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                   const std::string& out_dir) {
    if (records.empty()) {
        throw ConfigError("write_metrics requires at least one step record");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw SimulationFault("cannot create output directory " + out_dir + ": " +
                              ec.message());
    }
    const std::filesystem::path dir(out_dir);
    write_file_atomic((dir / "metrics.csv").string(), metrics_csv(config, records));
    write_file_atomic((dir / "records.ndjson").string(), records_ndjson(records));
}

std::vector<PlotRequest> parse_plot_list(const std::string& list) {
    std::vector<PlotRequest> requests;
    std::istringstream in(list);
    std::string token;
    while (std::getline(in, token, ',')) {
        const auto first = token.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = token.find_last_not_of(" \t");
        token = token.substr(first, last - first + 1);
        if (token == "policyTrace") {
            requests.push_back(PlotRequest{PlotKind::kPolicyTrace, -1});
        } else if (token == "servedVolumes") {
            requests.push_back(PlotRequest{PlotKind::kServedVolumes, -1});
        } else if (token == "revenueRate") {
            requests.push_back(PlotRequest{PlotKind::kRevenueRate, -1});
        } else if (token == "totalRevenue") {
            requests.push_back(PlotRequest{PlotKind::kTotalRevenue, -1});
        } else if (token.rfind("policyDensity=", 0) == 0) {
            const std::string arg = token.substr(std::string("policyDensity=").size());
            try {
                std::size_t used = 0;
                const std::int64_t step = std::stoll(arg, &used);
                if (used != arg.size() || step < 0) {
                    throw std::invalid_argument(arg);
                }
                requests.push_back(PlotRequest{PlotKind::kPolicyDensity, step});
            } catch (const std::exception&) {
                throw ConfigError("policyDensity needs a nonnegative step, got '" + arg +
                                  "'");
            }
        } else {
            throw ConfigError("unknown plot kind '" + token + "'");
        }
    }
    return requests;
}

namespace {

struct PlotSeries {
    std::string name;
    std::string filename;
    std::string content;
};

std::string plot_kind_token(PlotKind kind) {
    switch (kind) {
        case PlotKind::kPolicyTrace:
            return "policyTrace";
        case PlotKind::kServedVolumes:
            return "servedVolumes";
        case PlotKind::kRevenueRate:
            return "revenueRate";
        case PlotKind::kTotalRevenue:
            return "totalRevenue";
        case PlotKind::kPolicyDensity:
            return "policyDensity";
    }
    throw ConfigError("invalid plot kind value");
}

}  // namespace

void emit_plot_data(const ScenarioConfig& config, const std::vector<StepRecord>& records,
                    const PlotRequest& request, const std::string& out_dir) {
    if (records.empty()) {
        throw ConfigError("emit_plot_data requires at least one step record");
    }
    std::vector<PlotSeries> series;
    const std::size_t n = config.agents.size();

    switch (request.kind) {
        case PlotKind::kPolicyTrace: {
            for (std::size_t i = 0; i < n; ++i) {
                if (!agent_is_bandit(config.agents[i])) {
                    continue;
                }
                const std::string& label = agent_label(config.agents[i]);
                std::ostringstream data;
                data << "# step mean stddev\n";
                for (const StepRecord& record : records) {
                    if (record.snapshots[i].has_value()) {
                        data << record.step << ' ' << fmt_g9(record.snapshots[i]->mean)
                             << ' ' << fmt_g9(record.snapshots[i]->stddev) << "\n";
                    }
                }
                series.push_back({label, "policy_trace_" + label + ".dat", data.str()});
            }
            break;
        }
        case PlotKind::kServedVolumes: {
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& label = agent_label(config.agents[i]);
                std::ostringstream data;
                data << "# step served\n";
                for (const StepRecord& record : records) {
                    data << record.step << ' ' << fmt_g9(record.agents[i].served) << "\n";
                }
                series.push_back({label, "served_volumes_" + label + ".dat", data.str()});
            }
            std::ostringstream dropped;
            dropped << "# step dropped\n";
            for (const StepRecord& record : records) {
                dropped << record.step << ' ' << fmt_g9(record.dropped) << "\n";
            }
            series.push_back({"dropped", "served_volumes_dropped.dat", dropped.str()});
            break;
        }
        case PlotKind::kRevenueRate: {
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& label = agent_label(config.agents[i]);
                std::ostringstream data;
                data << "# step reward\n";
                for (const StepRecord& record : records) {
                    data << record.step << ' ' << fmt_g9(record.agents[i].reward) << "\n";
                }
                series.push_back({label, "revenue_rate_" + label + ".dat", data.str()});
            }
            break;
        }
        case PlotKind::kTotalRevenue: {
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& label = agent_label(config.agents[i]);
                std::ostringstream data;
                data << "# step cumulativeRevenue\n";
                for (const StepRecord& record : records) {
                    data << record.step << ' '
                         << fmt_g9(record.agents[i].cumulative_revenue) << "\n";
                }
                series.push_back({label, "total_revenue_" + label + ".dat", data.str()});
            }
            break;
        }
        case PlotKind::kPolicyDensity: {
            const StepRecord* target = nullptr;
            for (const StepRecord& record : records) {
                if (record.step == request.density_step) {
                    target = &record;
                    break;
                }
            }
            if (target == nullptr) {
                throw ConfigError("policyDensity: no record for step " +
                                  std::to_string(request.density_step));
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (!agent_is_bandit(config.agents[i])) {
                    continue;
                }
                const std::string& label = agent_label(config.agents[i]);
                if (!target->snapshots[i].has_value()) {
                    throw ConfigError("policyDensity: no snapshot at step " +
                                      std::to_string(request.density_step) + " for agent " +
                                      label);
                }
                const PolicySnapshot& snap = *target->snapshots[i];
                std::ostringstream data;
                data << "# price density\n";
                constexpr int kGridPoints = 256;
                const double floor = config.price_bounds.floor;
                const double span = config.price_bounds.ceiling - floor;
                for (int k = 0; k < kGridPoints; ++k) {
                    const double price =
                        floor + span * static_cast<double>(k) / (kGridPoints - 1);
                    const double z = (price - snap.mean) / snap.stddev;
                    const double density = std::exp(-0.5 * z * z) /
                                           (snap.stddev * std::sqrt(2.0 * std::numbers::pi));
                    data << fmt_g9(price) << ' ' << fmt_g9(density) << "\n";
                }
                series.push_back({label,
                                  "policy_density_" + label + "_step" +
                                      std::to_string(request.density_step) + ".dat",
                                  data.str()});
            }
            break;
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw SimulationFault("cannot create output directory " + out_dir + ": " +
                              ec.message());
    }
    const std::filesystem::path dir(out_dir);
    std::ostringstream manifest;
    manifest << "# series file\n";
    for (const PlotSeries& s : series) {
        write_file_atomic((dir / s.filename).string(), s.content);
        manifest << s.name << ' ' << s.filename << "\n";
    }
    write_file_atomic((dir / (plot_kind_token(request.kind) + ".manifest")).string(),
                      manifest.str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw ConfigError("read failed: " + path);
    }
    return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw SimulationFault("cannot open for writing: " + temp);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw SimulationFault("write failed: " + temp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        throw SimulationFault("cannot move " + temp + " into place: " + ec.message());
    }
}

}  // namespace pricesim
