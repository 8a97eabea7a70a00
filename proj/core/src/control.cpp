#include "pricesim/control.hpp"

#include <cmath>
#include <filesystem>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "pricesim/errors.hpp"
#include "pricesim/random.hpp"
#include "pricesim/scenario_io.hpp"

namespace pricesim {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

double require_double(const Json& object, const char* key, const std::string& path) {
    if (!object.contains(key)) {
        fail(path + "." + key, "required");
    }
    if (!object.at(key).is_number()) {
        fail(path + "." + key, "expected a number");
    }
    return object.at(key).get<double>();
}

std::string rule_name(UpdateRule rule) {
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

UpdateRule rule_from_name(const std::string& name, const std::string& path) {
    if (name == "vanillaPG") {
        return UpdateRule::kVanillaPg;
    }
    if (name == "ppoClear") {
        return UpdateRule::kPpoClear;
    }
    if (name == "ppoRolling") {
        return UpdateRule::kPpoRolling;
    }
    fail(path, "unknown update rule '" + name + "'");
}

Json bandit_config_to_json(const BanditConfig& config) {
    Json node;
    node["updateRule"] = rule_name(config.update_rule);
    node["initialMean"] = config.initial_params.mean;
    node["initialStddev"] = config.initial_params.stddev();
    node["learningRate"] = config.learning_rate;
    node["clipEpsilon"] = config.clip_epsilon;
    node["bufferCapacity"] = config.buffer_capacity;
    node["epochsPerUpdate"] = config.epochs_per_update;
    node["baselineDecay"] = config.baseline_decay;
    node["pullRate"] = config.pull_rate;
    node["noRewardWindow"] = config.no_reward_window;
    node["logSpace"] = config.log_space;
    return node;
}

Json control_config_to_json(const ControlConfig& config) {
    Json doc;
    doc["schemaVersion"] = kControlSchemaVersion;
    doc["seed"] = config.seed;
    doc["priceBounds"] = {{"floor", config.bounds.floor},
                          {"ceiling", config.bounds.ceiling}};
    doc["bandit"] = bandit_config_to_json(config.bandit);
    return doc;
}

ControlConfig control_config_from_json(const Json& doc, const std::string& root) {
    if (!doc.is_object()) {
        fail(root, "expected a JSON object");
    }
    ControlConfig config;
    if (doc.contains("schemaVersion")) {
        if (!doc.at("schemaVersion").is_number_integer() ||
            doc.at("schemaVersion").get<std::int64_t>() != kControlSchemaVersion) {
            fail(root + ".schemaVersion", "unsupported version (expected " +
                                              std::to_string(kControlSchemaVersion) + ")");
        }
    }
    if (doc.contains("seed")) {
        const Json& seed = doc.at("seed");
        if (seed.is_number_unsigned()) {
            config.seed = seed.get<std::uint64_t>();
        } else if (seed.is_number_integer() && seed.get<std::int64_t>() >= 0) {
            config.seed = static_cast<std::uint64_t>(seed.get<std::int64_t>());
        } else {
            fail(root + ".seed", "expected a nonnegative integer");
        }
    }
    if (doc.contains("priceBounds")) {
        const Json& bounds = doc.at("priceBounds");
        if (!bounds.is_object()) {
            fail(root + ".priceBounds", "expected a JSON object");
        }
        config.bounds.floor = require_double(bounds, "floor", root + ".priceBounds");
        config.bounds.ceiling = require_double(bounds, "ceiling", root + ".priceBounds");
    }
    if (!doc.contains("bandit")) {
        fail(root + ".bandit", "required");
    }
    const Json& bandit = doc.at("bandit");
    if (!bandit.is_object()) {
        fail(root + ".bandit", "expected a JSON object");
    }
    const std::string path = root + ".bandit";
    for (const auto& [key, value] : bandit.items()) {
        static_cast<void>(value);
        if (key != "updateRule" && key != "initialMean" && key != "initialStddev" &&
            key != "learningRate" && key != "clipEpsilon" && key != "bufferCapacity" &&
            key != "epochsPerUpdate" && key != "baselineDecay" && key != "pullRate" &&
            key != "noRewardWindow" && key != "logSpace") {
            fail(path + "." + key, "unknown key");
        }
    }
    if (!bandit.contains("updateRule")) {
        fail(path + ".updateRule", "required");
    }
    config.bandit.update_rule = rule_from_name(
        bandit.at("updateRule").is_string() ? bandit.at("updateRule").get<std::string>()
                                            : std::string(),
        path + ".updateRule");
    config.bandit.initial_params.mean = require_double(bandit, "initialMean", path);
    const double initial_stddev = require_double(bandit, "initialStddev", path);
    if (!(initial_stddev > 0.0)) {
        fail(path + ".initialStddev", "must be > 0");
    }
    config.bandit.initial_params.scale_param = std::log(initial_stddev);
    if (bandit.contains("learningRate")) {
        config.bandit.learning_rate = require_double(bandit, "learningRate", path);
    }
    if (bandit.contains("clipEpsilon")) {
        config.bandit.clip_epsilon = require_double(bandit, "clipEpsilon", path);
    }
    if (bandit.contains("bufferCapacity")) {
        const Json& capacity = bandit.at("bufferCapacity");
        if (!capacity.is_number_integer() || capacity.get<std::int64_t>() < 1) {
            fail(path + ".bufferCapacity", "expected an integer >= 1");
        }
        config.bandit.buffer_capacity =
            static_cast<std::size_t>(capacity.get<std::int64_t>());
    }
    if (bandit.contains("epochsPerUpdate")) {
        const Json& epochs = bandit.at("epochsPerUpdate");
        if (!epochs.is_number_integer()) {
            fail(path + ".epochsPerUpdate", "expected an integer");
        }
        config.bandit.epochs_per_update = static_cast<int>(epochs.get<std::int64_t>());
    }
    if (bandit.contains("baselineDecay")) {
        config.bandit.baseline_decay = require_double(bandit, "baselineDecay", path);
    }
    if (bandit.contains("pullRate")) {
        config.bandit.pull_rate = require_double(bandit, "pullRate", path);
    }
    if (bandit.contains("noRewardWindow")) {
        const Json& window = bandit.at("noRewardWindow");
        if (!window.is_number_integer()) {
            fail(path + ".noRewardWindow", "expected an integer");
        }
        config.bandit.no_reward_window = static_cast<int>(window.get<std::int64_t>());
    }
    if (bandit.contains("logSpace")) {
        if (!bandit.at("logSpace").is_boolean()) {
            fail(path + ".logSpace", "expected a boolean");
        }
        config.bandit.log_space = bandit.at("logSpace").get<bool>();
    }

    if (!std::isfinite(config.bounds.floor) || !std::isfinite(config.bounds.ceiling) ||
        config.bounds.floor < 0.0 || config.bounds.floor >= config.bounds.ceiling) {
        fail(root + ".priceBounds", "must satisfy 0 <= floor < ceiling");
    }
    validate_bandit_config(config.bandit);
    return config;
}

Json experience_to_json(const Experience& e) {
    Json node;
    node["rawAction"] = e.raw_action;
    node["price"] = e.price;
    node["reward"] = e.reward;
    node["behaviorLogProb"] = e.behavior_log_prob;
    node["step"] = e.step;
    return node;
}

}  // namespace

ControlConfig parse_control_config(const std::string& json_text) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
        static_cast<void>(value);
        if (key != "schemaVersion" && key != "seed" && key != "priceBounds" &&
            key != "bandit") {
            fail(key, "unknown key");
        }
    }
    return control_config_from_json(doc, "config");
}

ControlConfig load_control_config(const std::string& path) {
    try {
        return parse_control_config(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string serialize_control_config(const ControlConfig& config) {
    return control_config_to_json(config).dump(2) + "\n";
}

PriceController::PriceController(ControlConfig config, std::string state_path)
    : config_(config),
      state_path_(std::move(state_path)),
      agent_(config.bandit, config.bounds,
             RandomStream(substream_seed(config.seed, 1))) {
    if (std::filesystem::exists(state_path_)) {
        // Resume. Any defect in the state file refuses the start; silently
        // falling back to a fresh policy would discard learned state.
        Json doc;
        try {
            doc = Json::parse(read_file(state_path_));
        } catch (const Json::parse_error& e) {
            throw ConfigError("state file " + state_path_ + " is corrupt: " + e.what());
        }
        if (!doc.is_object()) {
            throw ConfigError("state file " + state_path_ + " is corrupt: not an object");
        }
        try {
            if (!doc.contains("schemaVersion") ||
                doc.at("schemaVersion").get<std::int64_t>() != kControlSchemaVersion) {
                throw ConfigError("unsupported schemaVersion");
            }
            const ControlConfig recorded =
                control_config_from_json(doc.at("config"), "state.config");
            if (!(recorded == config_)) {
                throw ConfigError(
                    "state file was produced by a different agent config; refusing to mix");
            }
            BanditState state;
            state.params.mean = doc.at("params").at("mean").get<double>();
            state.params.scale_param = doc.at("params").at("scaleParam").get<double>();
            state.baseline.ema_value = doc.at("baseline").at("emaValue").get<double>();
            state.baseline.ema_abs = doc.at("baseline").at("emaAbs").get<double>();
            state.baseline.observations =
                doc.at("baseline").at("observations").get<std::int64_t>();
            state.baseline.decay = config_.bandit.baseline_decay;
            state.zero_reward_streak = doc.at("zeroRewardStreak").get<int>();
            state.rng_state = doc.at("rngState").get<std::string>();
            for (const Json& entry : doc.at("buffer")) {
                state.buffer_entries.push_back(
                    Experience{entry.at("rawAction").get<double>(),
                               entry.at("price").get<double>(),
                               entry.at("reward").get<double>(),
                               entry.at("behaviorLogProb").get<double>(),
                               entry.at("step").get<std::int64_t>()});
            }
            agent_ = BanditAgent::restore(config_.bandit, config_.bounds, state);
            step_ = doc.at("step").get<std::int64_t>();
            last_raw_action_ = doc.at("lastRawAction").get<double>();
            last_price_ = doc.at("lastPrice").get<double>();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("state file " + state_path_ + " is corrupt: " + e.what());
        }
    } else {
        // Fresh start: sample the first price, persist, and queue its
        // announcement so the consumer has a price before the first window.
        const ActionSample first = agent_.sample();
        last_raw_action_ = first.raw_action;
        last_price_ = first.price.value;
        step_ = 0;
        persist();
        pending_emission_ = price_message();
    }
}

void PriceController::persist() const {
    Json doc;
    doc["schemaVersion"] = kControlSchemaVersion;
    doc["config"] = control_config_to_json(config_);
    doc["step"] = step_;
    doc["lastRawAction"] = last_raw_action_;
    doc["lastPrice"] = last_price_;
    doc["params"] = {{"mean", agent_.params().mean},
                     {"scaleParam", agent_.params().scale_param}};
    doc["baseline"] = {{"emaValue", agent_.baseline().ema_value},
                       {"emaAbs", agent_.baseline().ema_abs},
                       {"observations", agent_.baseline().observations}};
    doc["zeroRewardStreak"] = agent_.zero_reward_streak();
    Json buffer = Json::array();
    for (const Experience& e : agent_.buffer().entries()) {
        buffer.push_back(experience_to_json(e));
    }
    doc["buffer"] = std::move(buffer);
    doc["rngState"] = agent_.export_state().rng_state;
    write_file_atomic(state_path_, doc.dump() + "\n");
}

std::string PriceController::price_message() const {
    Json message;
    message["type"] = "price";
    message["value"] = last_price_;
    message["mean"] = agent_.params().mean;
    message["stddev"] = agent_.params().stddev();
    message["step"] = step_;
    return message.dump();
}

std::optional<std::string> PriceController::take_pending_emission() {
    std::optional<std::string> pending = std::move(pending_emission_);
    pending_emission_.reset();
    return pending;
}

std::optional<std::string> PriceController::handle_line(const std::string& line,
                                                        std::ostream& log) {
    Json message;
    try {
        message = Json::parse(line);
    } catch (const Json::parse_error&) {
        log << "control: skipping malformed line (not JSON)\n";
        return std::nullopt;
    }
    if (!message.is_object() || !message.contains("type") ||
        !message.at("type").is_string() ||
        message.at("type").get<std::string>() != "volume") {
        log << "control: skipping message without type \"volume\"\n";
        return std::nullopt;
    }
    if (!message.contains("servedQueries") || !message.at("servedQueries").is_number()) {
        log << "control: skipping volume message without numeric servedQueries\n";
        return std::nullopt;
    }
    const double served = message.at("servedQueries").get<double>();
    if (!std::isfinite(served) || served < 0.0) {
        log << "control: skipping volume message with invalid servedQueries\n";
        return std::nullopt;
    }
    if (!message.contains("windowSeconds") || !message.at("windowSeconds").is_number() ||
        !(message.at("windowSeconds").get<double>() > 0.0)) {
        log << "control: skipping volume message without positive windowSeconds\n";
        return std::nullopt;
    }

    const Reward reward = agent_revenue(Price{last_price_}, QueryVolume{served});
    agent_.observe(last_raw_action_, Price{last_price_}, reward, step_);
    agent_.learn();
    ++step_;
    const ActionSample next = agent_.sample();
    last_raw_action_ = next.raw_action;
    last_price_ = next.price.value;
    persist();
    return price_message();
}

int PriceController::run(std::istream& in, std::ostream& out, std::ostream& log) {
    if (auto greeting = take_pending_emission()) {
        out << *greeting << "\n" << std::flush;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (auto reply = handle_line(line, log)) {
            out << *reply << "\n" << std::flush;
        }
    }
    return 0;
}

}  // namespace pricesim
