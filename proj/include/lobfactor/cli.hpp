#pragma once

// Batch pipeline commands. Each command reads and writes only files; the
// executable in tools/ maps flags onto PipelineConfig and calls these.
//
// Directory layout written by run-all (each step can also be run alone):
//   snapshots/index.csv, snapshots/book_NNNNNN.csv   build-books
//   observations.csv                                 fit
//   deseasonalized.csv, profile.json                 deseasonalize
//   report.json                                      calibrate
//   impulse_beta_minus.csv, impulse_beta_plus.csv,
//   autocovariance.csv                               impulse
//   equilibrium.json                                 equilibrium

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lobfactor/book_csv.hpp"
#include "lobfactor/events_ndjson.hpp"
#include "lobfactor/report_json.hpp"
#include "lobfactor/synth.hpp"

namespace lobfactor::cli {

namespace fs = std::filesystem;

struct PipelineConfig {
    fs::path input;
    fs::path out = ".";
    double interval_seconds = 600.0;
    int depth = 10;
    TradingWindow window;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double value_unit = 1e6;
    std::int64_t bucket_seconds = 3600;
    bool zero_first_column = false;
    // impulse
    std::size_t horizon = 12;
    double shock = 1.0;  // stationary standard deviations
    std::size_t max_lag = 12;
    // simulate
    std::size_t steps = 36;
    std::size_t paths = 100;
    // synth section of the config file, if any
    nlohmann::json synth;

    std::int64_t interval_ns() const { return std::llround(interval_seconds * kNanosPerSecond); }

    void validate() const {
        if (!(interval_seconds > 0.0) || interval_ns() <= 0) {
            throw Error("config.InvalidInterval", "interval must be positive");
        }
        if (depth < 1) throw Error("config.InvalidDepth", "depth must be at least 1");
        if (window.start_ns >= window.end_ns) throw Error("config.BadWindow", "window start must precede end");
        if (!(value_unit > 0.0)) throw Error("config.InvalidValueUnit", "value_unit must be positive");
        if (bucket_seconds <= 0) throw Error("config.InvalidBuckets", "bucket_seconds must be positive");
        if (jobs < 1) throw Error("config.InvalidJobs", "jobs must be at least 1");
        if (horizon < 1) throw Error("config.InvalidHorizon", "horizon must be at least 1");
        if (steps < 1 || paths < 1) throw Error("config.InvalidSimulation", "steps and paths must be at least 1");
    }

    BucketScheme scheme() const { return {window, bucket_seconds * kNanosPerSecond}; }
};

/// Applies the keys of a JSON config document; unknown keys are rejected.
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw Error("config.BadConfig", "config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "input") cfg.input = value.get<std::string>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "interval") cfg.interval_seconds = value.get<double>();
            else if (key == "depth") cfg.depth = value.get<int>();
            else if (key == "window") cfg.window = TradingWindow::parse(value.get<std::string>());
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "jobs") cfg.jobs = value.get<unsigned>();
            else if (key == "value_unit") cfg.value_unit = value.get<double>();
            else if (key == "bucket_seconds") cfg.bucket_seconds = value.get<std::int64_t>();
            else if (key == "zero_first_column") cfg.zero_first_column = value.get<bool>();
            else if (key == "horizon") cfg.horizon = value.get<std::size_t>();
            else if (key == "shock") cfg.shock = value.get<double>();
            else if (key == "max_lag") cfg.max_lag = value.get<std::size_t>();
            else if (key == "steps") cfg.steps = value.get<std::size_t>();
            else if (key == "paths") cfg.paths = value.get<std::size_t>();
            else if (key == "synth") cfg.synth = value;
            else throw Error("config.UnknownKey", "unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("config.BadConfig", std::string("config value has the wrong type: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const fs::path& path, const char* code) {
    std::ifstream in(path);
    if (!in) throw Error("io.MissingInput", "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(code, path.string() + ": " + e.what());
    }
}

namespace detail {

inline std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io.MissingInput", "cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io.CannotWrite", "cannot write " + path.string());
    return out;
}

inline void close_output(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw Error("io.CannotWrite", "failed writing " + path.string());
}

inline std::string snapshot_name(std::size_t i) {
    std::string digits = std::to_string(i);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "book_" + digits + ".csv";
}

} // namespace detail

// ---- snapshot directories ----

/// Streams snapshots into `dir` as book_NNNNNN.csv plus index.csv (timestamp, filename).
class SnapshotWriter {
public:
    explicit SnapshotWriter(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        index_ = detail::open_output(dir_ / "index.csv");
        index_ << "timestamp,filename\n";
    }

    void write(const OrderBook& book) {
        const auto name = detail::snapshot_name(count_++);
        auto out = detail::open_output(dir_ / name);
        write_book_csv(out, book);
        detail::close_output(out, dir_ / name);
        index_ << format_iso8601(book.timestamp()) << ',' << name << '\n';
    }

    std::size_t finish() {
        detail::close_output(index_, dir_ / "index.csv");
        return count_;
    }

private:
    fs::path dir_;
    std::ofstream index_;
    std::size_t count_ = 0;
};

/// Reads a snapshot directory. A directory without index.csv and without any
/// .csv file holds zero snapshots.
inline std::vector<OrderBook> read_snapshot_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("io.MissingInput", "snapshot directory " + dir.string() + " not found");
    const auto index_path = dir / "index.csv";
    if (!fs::exists(index_path)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".csv") {
                throw Error("io.BadIndex", "snapshot directory " + dir.string() + " has CSV files but no index.csv");
            }
        }
        return {};
    }
    auto index = detail::open_input(index_path);
    std::vector<OrderBook> books;
    std::string line;
    bool header = false;
    while (std::getline(index, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header) {
            if (line != "timestamp,filename") throw Error("io.BadIndex", "index.csv header must be 'timestamp,filename'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("io.BadIndex", "index.csv row '" + line + "' needs two fields");
        const Timestamp ts = parse_iso8601(line.substr(0, comma));
        const fs::path file = dir / line.substr(comma + 1);
        auto in = detail::open_input(file);
        try {
            books.push_back(read_book_csv(in, ts));
        } catch (const Error& e) {
            throw Error(e.code(), file.string() + ": " + e.what());
        }
    }
    return books;
}

// ---- commands ----

inline std::size_t cmd_build_books(const PipelineConfig& cfg) {
    cfg.validate();
    auto in = detail::open_input(cfg.input);
    SnapshotWriter writer(cfg.out);
    BookSampler sampler(cfg.interval_ns(), cfg.window, [&](const OrderBook& b) { writer.write(b); });
    read_events_ndjson(in, [&](const OrderEvent& ev) { sampler.push(ev); });
    sampler.finish();
    const auto n = writer.finish();
    spdlog::info("build-books: wrote {} snapshots to {}", n, cfg.out.string());
    return n;
}

/// Fits every snapshot (in parallel across `jobs`, output order preserved).
inline std::vector<ImpactObservation> fit_snapshots(std::span<const OrderBook> books, const PipelineConfig& cfg) {
    const FitConfig fit{cfg.depth, std::nullopt, cfg.value_unit};
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(books.size())));
    std::vector<ExtractResult> parts(jobs);
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = books.empty() ? 0 : (books.size() + jobs - 1) / jobs;
        for (unsigned j = 0; j < jobs; ++j) {
            const std::size_t begin = std::min(books.size(), j * chunk);
            const std::size_t end = std::min(books.size(), begin + chunk);
            workers.emplace_back([&, j, begin, end] { parts[j] = extract_series(books.subspan(begin, end - begin), fit); });
        }
    }
    std::vector<ImpactObservation> obs;
    for (const auto& part : parts) {
        for (const auto& s : part.skipped) {
            spdlog::warn("fit: skipped snapshot {} ({}: {})", format_iso8601(s.ts), s.code, s.reason);
        }
        obs.insert(obs.end(), part.observations.begin(), part.observations.end());
    }
    for (const auto& o : obs) {
        if (o.floored) spdlog::warn("fit: nonpositive beta floored at {}", format_iso8601(o.ts));
    }
    return obs;
}

inline std::size_t cmd_fit(const PipelineConfig& cfg) {
    cfg.validate();
    const auto books = read_snapshot_dir(cfg.input);
    if (books.empty()) spdlog::warn("fit: no snapshots in {}; writing an empty observations file", cfg.input.string());
    const auto obs = fit_snapshots(books, cfg);
    const auto path = cfg.out / "observations.csv";
    auto out = detail::open_output(path);
    write_observations_csv(out, obs);
    detail::close_output(out, path);
    spdlog::info("fit: {} observations from {} snapshots", obs.size(), books.size());
    return obs.size();
}

inline ObservationsFile read_observations_file(const fs::path& path) {
    auto in = detail::open_input(path);
    return read_observations_csv(in);
}

inline SeasonalProfile cmd_deseasonalize(const PipelineConfig& cfg) {
    cfg.validate();
    const auto file = read_observations_file(cfg.input);
    if (file.deseasonalized) throw Error("seasonal.AlreadyDeseasonalized", cfg.input.string() + " is already deseasonalized");
    const auto profile = fit_profile(file.observations, cfg.scheme());
    const auto des = deseasonalize(file.observations, profile);

    const auto obs_path = cfg.out / "deseasonalized.csv";
    auto out = detail::open_output(obs_path);
    write_observations_csv(out, des, /*deseasonalized=*/true);
    detail::close_output(out, obs_path);

    const auto prof_path = cfg.out / "profile.json";
    auto pout = detail::open_output(prof_path);
    pout << profile_to_json(profile).dump(2) << '\n';
    detail::close_output(pout, prof_path);
    spdlog::info("deseasonalize: {} observations, {} buckets", des.size(), profile.beta_minus.size());
    return profile;
}

inline Calibration cmd_calibrate(const PipelineConfig& cfg) {
    cfg.validate();
    const auto file = read_observations_file(cfg.input);
    if (!file.deseasonalized) spdlog::warn("calibrate: {} is not marked deseasonalized", cfg.input.string());
    const auto series = state_series_from_observations(file.observations, cfg.interval_ns(), 1.0);
    CalibrateOptions opt;
    opt.estimate.zero_first_column = cfg.zero_first_column;
    const auto cal = calibrate(series, opt);
    if (!cal.stationary) spdlog::warn("calibrate: estimated A is not stable");
    if (cal.near_singular_B) spdlog::warn("calibrate: estimated B is nearly singular; A may be poorly determined");

    const auto path = cfg.out / "report.json";
    auto out = detail::open_output(path);
    out << report_to_json(cal, cfg.interval_seconds).dump(2) << '\n';
    detail::close_output(out, path);
    spdlog::info("calibrate: {} transitions", cal.discrete.n_pairs);
    return cal;
}

inline CalibrationReport read_report(const fs::path& path) { return report_from_json(read_json_file(path, "io.BadReport")); }

inline PathArray cmd_simulate(const PipelineConfig& cfg) {
    cfg.validate();
    const auto report = read_report(cfg.input);
    const Vec xi0 = equilibrium(report.params);
    const auto paths = simulate(report.params, xi0, {cfg.steps, 1.0, cfg.paths, cfg.seed, cfg.jobs});
    const auto path = cfg.out / "paths.csv";
    auto out = detail::open_output(path);
    write_paths_csv(out, paths);
    detail::close_output(out, path);
    return paths;
}

inline void cmd_impulse(const PipelineConfig& cfg) {
    cfg.validate();
    const auto report = read_report(cfg.input);
    for (Eigen::Index shocked : {1, 2}) {
        const auto resp = impulse_response(report.params, {shocked, cfg.shock, cfg.horizon, 1.0});
        const auto path = cfg.out / (shocked == 1 ? "impulse_beta_minus.csv" : "impulse_beta_plus.csv");
        auto out = detail::open_output(path);
        write_impulse_csv(out, resp);
        detail::close_output(out, path);
    }
    const auto path = cfg.out / "autocovariance.csv";
    auto out = detail::open_output(path);
    write_autocovariance_csv(out, model_autocovariance(report.params, cfg.max_lag, 1.0));
    detail::close_output(out, path);
}

/// Writes equilibrium.json and returns the equilibrium state.
inline Vec cmd_equilibrium(const PipelineConfig& cfg) {
    cfg.validate();
    const auto report = read_report(cfg.input);
    const Vec xi = equilibrium(report.params);
    ojson j;
    j["xi"] = vector_to_json(xi);
    j["stable"] = is_stable(report.params.A);
    if (is_stable(report.params.A)) j["stationary_covariance"] = matrix_to_json(stationary_covariance(report.params));
    const auto path = cfg.out / "equilibrium.json";
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    detail::close_output(out, path);
    return xi;
}

// ---- synth ----

/// Builds a SynthConfig from the "synth" config section. Window, interval,
/// seed, jobs, value unit and bucket width come from the pipeline config.
inline SynthConfig synth_config(const PipelineConfig& cfg) {
    const auto& j = cfg.synth;
    if (!j.is_object()) throw Error("config.MissingSynth", "config needs a \"synth\" object");
    SynthConfig s;
    try {
        if (!j.contains("truth")) throw Error("config.MissingSynth", "synth section needs \"truth\"");
        const auto report = report_from_json(j.at("truth"));
        s.truth = report.params;
        s.truth.sigma = psd_sqrt(report.params.q());
        s.scheme = cfg.scheme();
        s.interval_ns = cfg.interval_ns();
        s.seed = cfg.seed;
        s.jobs = cfg.jobs;
        s.value_unit = cfg.value_unit;
        s.days = j.value("days", std::size_t{1});
        s.levels = j.value("levels", cfg.depth);
        s.level_notional = j.value("level_notional", s.level_notional);
        if (j.contains("tick")) s.tick = Price::parse(j.at("tick").get<std::string>());
        if (j.contains("start_date")) {
            s.first_day = day_index(parse_iso8601(j.at("start_date").get<std::string>() + "T00:00:00Z"));
        }
        s.profile_minus = j.value("profile_minus", std::vector<double>{});
        s.profile_plus = j.value("profile_plus", std::vector<double>{});
        if (j.contains("initial")) s.initial = vector_from_json(j.at("initial"), "initial");
    } catch (const nlohmann::json::exception& e) {
        throw Error("config.BadConfig", std::string("bad synth section: ") + e.what());
    }
    s.validate();
    return s;
}

/// Writes events.ndjson, snapshots/ and truth.csv (the rendered-from factors).
inline SynthDataset cmd_synth(const PipelineConfig& cfg) {
    cfg.validate();
    const auto s = synth_config(cfg);
    auto ds = generate(s);

    const auto ev_path = cfg.out / "events.ndjson";
    auto ev_out = detail::open_output(ev_path);
    SynthEventEmitter emitter;
    for (const auto& book : ds.snapshots) {
        for (const auto& ev : emitter.next(book)) ev_out << event_to_ndjson(ev) << '\n';
    }
    detail::close_output(ev_out, ev_path);

    SnapshotWriter writer(cfg.out / "snapshots");
    for (const auto& book : ds.snapshots) writer.write(book);
    writer.finish();

    const auto truth_path = cfg.out / "truth.csv";
    auto tout = detail::open_output(truth_path);
    write_observations_csv(tout, ds.truth);
    detail::close_output(tout, truth_path);
    spdlog::info("synth: {} days, {} snapshots", s.days, ds.snapshots.size());
    return ds;
}

/// build-books -> fit -> deseasonalize -> calibrate -> impulse -> equilibrium,
/// each writing the same files as when run alone.
inline Calibration cmd_run_all(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineConfig step = cfg;
    step.out = cfg.out / "snapshots";
    cmd_build_books(step);
    step.input = cfg.out / "snapshots";
    step.out = cfg.out;
    cmd_fit(step);
    step.input = cfg.out / "observations.csv";
    cmd_deseasonalize(step);
    step.input = cfg.out / "deseasonalized.csv";
    auto cal = cmd_calibrate(step);
    step.input = cfg.out / "report.json";
    if (cal.stationary) {
        cmd_impulse(step);
    } else {
        spdlog::warn("run-all: skipping impulse responses for a non-stable model");
    }
    cmd_equilibrium(step);
    return cal;
}

} // namespace lobfactor::cli
