#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lobfactor/cli.hpp"

namespace {

using lobfactor::cli::PipelineConfig;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> input;
    std::optional<std::string> out;
    std::optional<double> interval;
    std::optional<int> depth;
    std::optional<std::string> window;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<double> value_unit;
    std::optional<std::int64_t> bucket_seconds;
    std::optional<std::size_t> horizon;
    std::optional<double> shock;
    std::optional<std::size_t> max_lag;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> paths;
    bool zero_first_column = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--input", f.input, "Input file or directory");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--interval", f.interval, "Sampling interval in seconds (default 600)");
    cmd->add_option("--depth", f.depth, "Price levels per side used by the fit (default 10)");
    cmd->add_option("--window", f.window, "Trading window HH:MM-HH:MM (default 10:00-16:00)");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--jobs", f.jobs, "Worker threads");
    cmd->add_option("--value-unit", f.value_unit, "Currency per unit of order value h (default 1e6)");
    cmd->add_option("--bucket-seconds", f.bucket_seconds, "Intraday bucket width (default 3600)");
    cmd->add_option("--horizon", f.horizon, "Impulse response horizon in steps (default 12)");
    cmd->add_option("--shock", f.shock, "Shock size in stationary standard deviations (default 1)");
    cmd->add_option("--max-lag", f.max_lag, "Largest autocovariance lag (default 12)");
    cmd->add_option("--steps", f.steps, "Simulated steps per path (default 36)");
    cmd->add_option("--paths", f.paths, "Simulated paths (default 100)");
    cmd->add_flag("--zero-first-column", f.zero_first_column, "Restrict the first column of A to zero");
}

PipelineConfig resolve(const Flags& f) {
    PipelineConfig cfg;
    if (f.config) lobfactor::cli::apply_config_json(cfg, lobfactor::cli::read_json_file(*f.config, "config.BadConfig"));
    if (f.input) cfg.input = *f.input;
    if (f.out) cfg.out = *f.out;
    if (f.interval) cfg.interval_seconds = *f.interval;
    if (f.depth) cfg.depth = *f.depth;
    if (f.window) cfg.window = lobfactor::TradingWindow::parse(*f.window);
    if (f.seed) cfg.seed = *f.seed;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (f.value_unit) cfg.value_unit = *f.value_unit;
    if (f.bucket_seconds) cfg.bucket_seconds = *f.bucket_seconds;
    if (f.horizon) cfg.horizon = *f.horizon;
    if (f.shock) cfg.shock = *f.shock;
    if (f.max_lag) cfg.max_lag = *f.max_lag;
    if (f.steps) cfg.steps = *f.steps;
    if (f.paths) cfg.paths = *f.paths;
    if (f.zero_first_column) cfg.zero_first_column = true;
    cfg.validate();
    return cfg;
}

void require_input(const PipelineConfig& cfg) {
    if (cfg.input.empty()) throw lobfactor::Error("config.MissingInput", "--input is required");
}

int report_error(const std::string& code, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = {{"code", code}, {"message", message}};
    std::cerr << j.dump() << std::endl;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("lobfactor");
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);

    CLI::App app{"Limit order book liquidity factors: extraction, calibration and dynamics"};
    app.require_subcommand(1);
    Flags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"build-books", "Sample book snapshots from an NDJSON event file"},
        {"fit", "Fit liquidity factors to a snapshot directory"},
        {"deseasonalize", "Remove the intraday profile from an observations file"},
        {"calibrate", "Estimate the linear SDE from deseasonalized observations"},
        {"simulate", "Simulate paths from a calibration report"},
        {"impulse", "Impulse responses and model autocovariances from a report"},
        {"equilibrium", "Equilibrium state of a report"},
        {"synth", "Generate a synthetic event file, snapshots and truth"},
        {"run-all", "Run build-books through equilibrium on an event file"},
    };
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("config.Usage", e.what());
        return 2;
    }

    namespace cli = lobfactor::cli;
    try {
        const PipelineConfig cfg = resolve(flags);
        const std::string name = app.get_subcommands().front()->get_name();
        if (name != "synth") require_input(cfg);
        if (name == "build-books") cli::cmd_build_books(cfg);
        else if (name == "fit") cli::cmd_fit(cfg);
        else if (name == "deseasonalize") cli::cmd_deseasonalize(cfg);
        else if (name == "calibrate") cli::cmd_calibrate(cfg);
        else if (name == "simulate") cli::cmd_simulate(cfg);
        else if (name == "impulse") cli::cmd_impulse(cfg);
        else if (name == "synth") cli::cmd_synth(cfg);
        else if (name == "run-all") cli::cmd_run_all(cfg);
        else if (name == "equilibrium") {
            const auto xi = cli::cmd_equilibrium(cfg);
            for (Eigen::Index i = 0; i < xi.size(); ++i) {
                std::cout << (i ? " " : "") << lobfactor::format_double(xi(i));
            }
            std::cout << '\n';
        }
    } catch (const lobfactor::Error& e) {
        return report_error(e.code(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error("io.Filesystem", e.what());
    } catch (const std::exception& e) {
        return report_error("internal", e.what());
    }
    return 0;
}
