#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "pricesim/agents.hpp"
#include "pricesim/market.hpp"

namespace pricesim {

inline constexpr int kControlSchemaVersion = 1;

// Agent-config document for the control loop: one bandit, its bounds, and
// the seed its sampling stream derives from.
struct ControlConfig {
    std::uint64_t seed = 0;
    PriceBounds bounds;
    BanditConfig bandit;

    bool operator==(const ControlConfig&) const = default;
};

ControlConfig parse_control_config(const std::string& json_text);
ControlConfig load_control_config(const std::string& path);
std::string serialize_control_config(const ControlConfig& config);

// Long-running price controller speaking NDJSON.
//
// Inbound lines report completed aggregation windows:
//   {"type":"volume","servedQueries":123.0,"windowSeconds":180.0}
// Each one is turned into reward = last emitted price x servedQueries, fed
// through the bandit's observe/learn cycle, and answered with
//   {"type":"price","value":p,"mean":m,"stddev":s,"step":n}
// The full bandit state (policy, buffer, baseline, counters, rng) is written
// to the state file with an atomic replace before the reply is emitted, so a
// killed process resumes bit-exactly from the file.
//
// Constructing with an existing state file resumes from it (the config must
// match the one recorded there); a missing file is a fresh start, which
// queues an initial price message before any input is read. A present but
// unreadable state file refuses to start (ConfigError).
class PriceController {
public:
    PriceController(ControlConfig config, std::string state_path);

    // Handles one inbound line. Returns the reply line (no trailing newline),
    // or nullopt if the line was malformed and skipped (noted on `log`).
    std::optional<std::string> handle_line(const std::string& line, std::ostream& log);

    // The queued initial price message of a fresh start, if any.
    std::optional<std::string> take_pending_emission();

    // Pumps `in` line by line until EOF, writing replies to `out` (flushed
    // per line) and skip notices to `log`. Returns a process exit code.
    int run(std::istream& in, std::ostream& out, std::ostream& log);

    const BanditAgent& agent() const { return agent_; }
    std::int64_t step() const { return step_; }
    double last_price() const { return last_price_; }

private:
    void persist() const;
    std::string price_message() const;

    ControlConfig config_;
    std::string state_path_;
    BanditAgent agent_;
    std::int64_t step_ = 0;
    double last_raw_action_ = 0.0;
    double last_price_ = 0.0;
    std::optional<std::string> pending_emission_;
};

}  // namespace pricesim
