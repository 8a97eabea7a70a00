#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pricesim/control.hpp"
#include "pricesim/errors.hpp"
#include "pricesim/scenario_io.hpp"

using namespace pricesim;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const char* kMinimalConfig = R"({
  "bandit": {"updateRule": "ppoRolling", "initialMean": 0.5, "initialStddev": 0.3}
})";

ControlConfig test_config() {
    ControlConfig config = parse_control_config(kMinimalConfig);
    config.bounds = {0.0, 2.0};
    return config;
}

std::string volume_line(double served, double seconds = 60.0) {
    std::ostringstream line;
    line << R"({"type":"volume","servedQueries":)" << served << R"(,"windowSeconds":)"
         << seconds << "}";
    return line.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pricesim_ctrl_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("control config parsing applies defaults and validates") {
    const ControlConfig config = parse_control_config(kMinimalConfig);
    CHECK(config.seed == 0);
    CHECK(config.bounds == PriceBounds{0.0, 1.0});
    CHECK(config.bandit.update_rule == UpdateRule::kPpoRolling);
    CHECK(config.bandit.initial_params.mean == 0.5);
    CHECK(config.bandit.initial_params.stddev() == doctest::Approx(0.3));
    CHECK(config.bandit.learning_rate == 0.01);
    CHECK(config.bandit.buffer_capacity == 16);

    CHECK_THROWS_AS(parse_control_config("{}"), ConfigError);           // bandit required
    CHECK_THROWS_AS(parse_control_config("{oops"), ConfigError);        // invalid JSON
    CHECK_THROWS_AS(parse_control_config(R"({"surprise": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_control_config(
                        R"({"schemaVersion": 9,
                            "bandit": {"updateRule":"ppoRolling",
                                       "initialMean":0.5,"initialStddev":0.3}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_control_config(
                        R"({"bandit": {"updateRule":"ppoRolling",
                                       "initialMean":0.5,"initialStddev":0.3,
                                       "learningRate":-1}})"),
                    ConfigError);

    // serialize o parse is stable: parsing the serialized form reproduces
    // the config (scale parameter up to one exp/log round trip).
    const ControlConfig reparsed = parse_control_config(serialize_control_config(config));
    CHECK(reparsed.seed == config.seed);
    CHECK(reparsed.bounds == config.bounds);
    CHECK(reparsed.bandit.update_rule == config.bandit.update_rule);
    CHECK(reparsed.bandit.initial_params.mean == config.bandit.initial_params.mean);
    CHECK(reparsed.bandit.initial_params.scale_param ==
          doctest::Approx(config.bandit.initial_params.scale_param).epsilon(1e-14));
    CHECK(reparsed.bandit.learning_rate == config.bandit.learning_rate);
    CHECK(reparsed.bandit.buffer_capacity == config.bandit.buffer_capacity);
    CHECK(reparsed.bandit.log_space == config.bandit.log_space);
}

TEST_CASE("fresh start persists state and queues a greeting price") {
    TempDir tmp;
    const std::string state_path = (tmp.path / "state.json").string();
    PriceController controller(test_config(), state_path);

    CHECK(fs::exists(state_path));
    const auto greeting = controller.take_pending_emission();
    REQUIRE(greeting.has_value());
    const Json message = Json::parse(*greeting);
    CHECK(message.at("type") == "price");
    CHECK(message.at("step") == 0);
    CHECK(message.at("value").get<double>() == controller.last_price());
    CHECK(message.at("mean").get<double>() == 0.5);
    CHECK(message.at("stddev").get<double>() == doctest::Approx(0.3));
    // The greeting is handed over exactly once.
    CHECK_FALSE(controller.take_pending_emission().has_value());
}

TEST_CASE("a volume window becomes reward = price x servedQueries") {
    TempDir tmp;
    PriceController controller(test_config(), (tmp.path / "state.json").string());
    const double greeting_price = controller.last_price();

    std::ostringstream log;
    const auto reply = controller.handle_line(volume_line(100.0), log);
    REQUIRE(reply.has_value());
    CHECK(log.str().empty());

    CHECK(controller.step() == 1);
    CHECK(controller.agent().baseline().observations == 1);
    CHECK(controller.agent().baseline().value() ==
          doctest::Approx(greeting_price * 100.0));

    const Json message = Json::parse(*reply);
    CHECK(message.at("type") == "price");
    CHECK(message.at("step") == 1);
    CHECK(message.at("value").get<double>() == controller.last_price());
}

TEST_CASE("malformed inbound lines are skipped with a log notice") {
    TempDir tmp;
    PriceController controller(test_config(), (tmp.path / "state.json").string());
    controller.take_pending_emission();

    const std::vector<std::pair<std::string, std::string>> cases = {
        {"this is not json", "not JSON"},
        {R"({"type":"price","servedQueries":5,"windowSeconds":60})", "volume"},
        {R"({"servedQueries":5,"windowSeconds":60})", "volume"},
        {R"({"type":"volume","windowSeconds":60})", "servedQueries"},
        {R"({"type":"volume","servedQueries":"many","windowSeconds":60})", "servedQueries"},
        {R"({"type":"volume","servedQueries":-4,"windowSeconds":60})", "servedQueries"},
        {R"({"type":"volume","servedQueries":5})", "windowSeconds"},
        {R"({"type":"volume","servedQueries":5,"windowSeconds":0})", "windowSeconds"},
    };
    for (const auto& [line, token] : cases) {
        CAPTURE(line);
        std::ostringstream log;
        const auto reply = controller.handle_line(line, log);
        CHECK_FALSE(reply.has_value());
        CHECK(log.str().find(token) != std::string::npos);
        CHECK(controller.step() == 0);  // nothing consumed a window
    }
}

TEST_CASE("kill/restart mid-stream reproduces the uninterrupted run exactly") {
    const int kWindows = 20;
    const int kCut = 7;
    std::vector<std::string> windows;
    for (int i = 0; i < kWindows; ++i) {
        windows.push_back(volume_line(50.0 + 10.0 * (i % 7)));
    }

    TempDir tmp;
    std::ostringstream log;

    // Reference: one uninterrupted controller.
    const std::string path_a = (tmp.path / "a.json").string();
    std::vector<std::string> output_a;
    {
        PriceController a(test_config(), path_a);
        output_a.push_back(*a.take_pending_emission());
        for (const std::string& w : windows) {
            output_a.push_back(*a.handle_line(w, log));
        }
    }

    // Same windows, but the process dies after kCut replies and a new one
    // resumes from the state file.
    const std::string path_b = (tmp.path / "b.json").string();
    std::vector<std::string> output_b;
    {
        PriceController b1(test_config(), path_b);
        output_b.push_back(*b1.take_pending_emission());
        for (int i = 0; i < kCut; ++i) {
            output_b.push_back(*b1.handle_line(windows[i], log));
        }
    }
    {
        PriceController b2(test_config(), path_b);
        CHECK_FALSE(b2.take_pending_emission().has_value());  // no second greeting
        for (int i = kCut; i < kWindows; ++i) {
            output_b.push_back(*b2.handle_line(windows[i], log));
        }
    }

    CHECK(output_a == output_b);
    CHECK(read_file(path_a) == read_file(path_b));
    CHECK(log.str().empty());
}

TEST_CASE("resume refuses corrupt or mismatched state") {
    TempDir tmp;
    const std::string state_path = (tmp.path / "state.json").string();
    { PriceController seeded(test_config(), state_path); }  // create valid state

    SUBCASE("corrupt file") {
        write_file_atomic(state_path, "]]] definitely not json");
        try {
            PriceController broken(test_config(), state_path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
        }
    }

    SUBCASE("wrong state schema version") {
        Json doc = Json::parse(read_file(state_path));
        doc["schemaVersion"] = 99;
        write_file_atomic(state_path, doc.dump() + "\n");
        CHECK_THROWS_AS(PriceController(test_config(), state_path), ConfigError);
    }

    SUBCASE("config drift") {
        ControlConfig drifted = test_config();
        drifted.bandit.learning_rate = 0.123;
        try {
            PriceController broken(drifted, state_path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("different agent config") != std::string::npos);
        }
    }
}

TEST_CASE("run() pumps stdin to stdout line by line") {
    TempDir tmp;
    PriceController controller(test_config(), (tmp.path / "state.json").string());

    std::istringstream in(volume_line(100.0) + "\n" +
                          "garbage line\n" +
                          "\n" +
                          volume_line(80.0) + "\n" +
                          volume_line(120.0) + "\n");
    std::ostringstream out;
    std::ostringstream log;
    CHECK(controller.run(in, out, log) == 0);

    std::vector<std::string> lines;
    std::istringstream reader(out.str());
    std::string line;
    while (std::getline(reader, line)) {
        lines.push_back(line);
    }
    REQUIRE(lines.size() == 4);  // greeting + 3 replies
    CHECK(Json::parse(lines[0]).at("step") == 0);
    CHECK(Json::parse(lines[3]).at("step") == 3);
    CHECK(log.str().find("not JSON") != std::string::npos);
    CHECK(controller.step() == 3);
}
