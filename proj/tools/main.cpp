#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pricesim/control.hpp"
#include "pricesim/errors.hpp"
#include "pricesim/scenario_io.hpp"
#include "pricesim/simulation.hpp"
#include "pricesim/version.hpp"

namespace {

using namespace pricesim;

std::string fmt_g9(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string summary_line(const ScenarioSummary& summary) {
    std::ostringstream out;
    out << "summary:";
    for (const AgentSummary& agent : summary.agents) {
        out << ' ' << agent.label << "{revenue=" << fmt_g9(agent.total_revenue)
            << " served=" << fmt_g9(agent.total_served);
        if (agent.is_bandit) {
            if (agent.final_snapshot.has_value()) {
                out << " mean=" << fmt_g9(agent.final_snapshot->mean)
                    << " stddev=" << fmt_g9(agent.final_snapshot->stddev);
            }
            out << " convergence=";
            if (agent.convergence_step.has_value()) {
                out << *agent.convergence_step;
            } else {
                out << "none";
            }
        }
        out << '}';
    }
    out << " dropped=" << fmt_g9(summary.total_dropped);
    return out.str();
}

struct SeedRun {
    std::uint64_t seed = 0;
    ScenarioSummary summary;
};

int run_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir, const std::string& plots, bool quiet) {
    const std::vector<PlotRequest> plot_requests = parse_plot_list(plots);
    ParsedScenario parsed = load_scenario_file(scenario_path);
    if (seed.has_value()) {
        parsed.config.seed = *seed;
    }
    const std::vector<StepRecord> records = run_scenario(parsed.config);
    write_metrics(parsed.config, records, out_dir);
    for (const PlotRequest& request : plot_requests) {
        emit_plot_data(parsed.config, records, request, out_dir);
    }
    if (!quiet) {
        std::cout << summary_line(summarize(parsed.config, records)) << "\n";
    }
    return 0;
}

int run_sweep(const std::string& scenario_path, int seeds, const std::string& out_dir,
              bool quiet) {
    if (seeds < 1) {
        throw ConfigError("--seeds must be >= 1");
    }
    const ParsedScenario parsed = load_scenario_file(scenario_path);

    std::vector<std::future<SeedRun>> futures;
    futures.reserve(static_cast<std::size_t>(seeds));
    for (int s = 0; s < seeds; ++s) {
        futures.push_back(std::async(std::launch::async, [&parsed, &out_dir, s]() {
            ScenarioConfig config = parsed.config;
            config.seed = static_cast<std::uint64_t>(s);
            const std::vector<StepRecord> records = run_scenario(config);
            char name[32];
            std::snprintf(name, sizeof name, "seed_%03d", s);
            write_metrics(config, records,
                          (std::filesystem::path(out_dir) / name).string());
            return SeedRun{config.seed, summarize(config, records)};
        }));
    }

    std::vector<SeedRun> runs;
    runs.reserve(futures.size());
    for (auto& future : futures) {
        runs.push_back(future.get());  // rethrows the first per-seed failure
    }

    std::ostringstream csv;
    csv << "seed,dropped";
    for (const AgentSummary& agent : runs.front().summary.agents) {
        csv << ",revenue_" << agent.label << ",served_" << agent.label;
        if (agent.is_bandit) {
            csv << ",final_mean_" << agent.label << ",final_stddev_" << agent.label
                << ",convergence_" << agent.label;
        }
    }
    csv << "\n";
    for (const SeedRun& run : runs) {
        csv << run.seed << ',' << fmt_g9(run.summary.total_dropped);
        for (const AgentSummary& agent : run.summary.agents) {
            csv << ',' << fmt_g9(agent.total_revenue) << ',' << fmt_g9(agent.total_served);
            if (agent.is_bandit) {
                csv << ',';
                if (agent.final_snapshot.has_value()) {
                    csv << fmt_g9(agent.final_snapshot->mean) << ','
                        << fmt_g9(agent.final_snapshot->stddev);
                } else {
                    csv << ',';
                }
                csv << ',';
                if (agent.convergence_step.has_value()) {
                    csv << *agent.convergence_step;
                }
            }
        }
        csv << "\n";
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw SimulationFault("cannot create output directory " + out_dir + ": " +
                              ec.message());
    }
    write_file_atomic((std::filesystem::path(out_dir) / "sweep_summary.csv").string(),
                      csv.str());
    if (!quiet) {
        std::cout << "sweep: " << seeds << " seeds written to " << out_dir << "\n";
    }
    return 0;
}

int run_control(const std::string& agent_config_path, const std::string& state_path,
                double window_seconds, bool quiet) {
    if (!(window_seconds > 0.0)) {
        throw ConfigError("--window-seconds must be > 0");
    }
    const ControlConfig config = load_control_config(agent_config_path);
    PriceController controller(config, state_path);
    if (!quiet) {
        std::cerr << "control: window " << window_seconds << "s, state " << state_path
                  << ", resuming at step " << controller.step() << "\n";
    }
    return controller.run(std::cin, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic multi-agent market simulator for dynamic pricing bandits"};
    app.set_version_flag("--version", std::string("pricesim ") + kVersion);
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir;
    std::string plots;
    bool quiet = false;
    int seeds = 1;
    std::string agent_config_path;
    std::string state_path;
    double window_seconds = 180.0;

    CLI::App* simulate = app.add_subcommand("simulate", "Run one scenario and write metrics");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    simulate->add_option("--seed", seed_override, "Override the scenario's seed");
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option(
        "--plots", plots,
        "Comma-separated plot kinds: policyTrace, servedVolumes, revenueRate, "
        "totalRevenue, policyDensity=STEP");
    simulate->add_flag("--quiet", quiet, "Suppress the summary line");

    CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario across seeds 0..N-1");
    sweep->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    sweep->add_option("--seeds", seeds, "Number of seeds to run")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_flag("--quiet", quiet, "Suppress the summary line");

    CLI::App* control =
        app.add_subcommand("control", "Drive one bandit from NDJSON volume reports");
    control->add_option("--agent-config", agent_config_path, "Bandit config JSON file")
        ->required();
    control->add_option("--state", state_path, "State file for crash-safe persistence")
        ->required();
    control->add_option("--window-seconds", window_seconds,
                        "Aggregation window length (default 180)");
    control->add_flag("--quiet", quiet, "Suppress the startup note");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) {
            return run_simulate(scenario_path, seed_override, out_dir, plots, quiet);
        }
        if (sweep->parsed()) {
            return run_sweep(scenario_path, seeds, out_dir, quiet);
        }
        return run_control(agent_config_path, state_path, window_seconds, quiet);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SimulationFault& e) {
        std::cerr << "fault: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fault: " << e.what() << "\n";
        return 2;
    }
}
