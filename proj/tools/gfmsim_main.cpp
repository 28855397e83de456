// gfmsim: scenario runner for the grid-forming converter simulator.
// Verbs: run, sweep, plot, validate. All outputs are deterministic.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gfm/config_io.hpp"
#include "gfm/csv.hpp"
#include "gfm/harness.hpp"
#include "gfm/svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissingFile = 2;
constexpr int kExitSchema = 3;
constexpr int kExitDiverged = 4;

struct RunOutcome {
    bool diverged = false;
    gfm::ScenarioMetrics metrics;
    std::string diagnostic;
};

// Simulate one scenario and write timeseries.csv, metrics.json and
// manifest.json into out_dir.
RunOutcome execute_run(const gfm::LoadedScenario& ls, const std::string& config_path,
                       const fs::path& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    gfm::TimeSeries ts = gfm::run_scenario(ls.cfg);
    gfm::ScenarioMetrics metrics = gfm::compute_metrics(ts, ls.cfg);

    const std::string csv = gfm::timeseries_to_csv(ts);
    const std::string metr = gfm::metrics_to_json(metrics, ts, ls.cfg).dump(2) + "\n";

    fs::create_directories(out_dir);
    gfm::write_text_file((out_dir / "timeseries.csv").string(), csv);
    gfm::write_text_file((out_dir / "metrics.json").string(), metr);

    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    const std::string manifest =
        gfm::make_manifest(ls, config_path,
                           {{"timeseries.csv", csv}, {"metrics.json", metr}},
                           static_cast<long>(wall))
            .dump(2) +
        "\n";
    gfm::write_text_file((out_dir / "manifest.json").string(), manifest);

    RunOutcome out;
    out.diverged = ts.diverged;
    out.metrics = std::move(metrics);
    out.diagnostic = ts.diagnostic;
    return out;
}

void print_run_summary(const std::string& name, const fs::path& out_dir,
                       const RunOutcome& r) {
    std::printf("%s: peak |i_c| %.4f pu @ %.4f s, peak |i_ref| %.4f pu, limiter %s\n",
                name.c_str(), r.metrics.peak_i_c.value, r.metrics.peak_i_c.t,
                r.metrics.peak_i_ref, r.metrics.limiter_engaged ? "engaged" : "idle");
    for (const auto& e : r.metrics.fm_events)
        std::printf("  mode -> %s at %.4f s\n",
                    e.to == gfm::Mode::Fault ? "fault" : "normal", e.t);
    std::printf("  final P %.4f pu, Q %.4f pu, omega %.4f rad/s\n", r.metrics.final_p,
                r.metrics.final_q, r.metrics.final_omega);
    if (r.metrics.p_settling_time)
        std::printf("  P settled at t = %.4f s\n", *r.metrics.p_settling_time);
    std::printf("  outputs in %s\n", out_dir.string().c_str());
    if (r.diverged)
        std::fprintf(stderr, "warning: %s diverged: %s\n", name.c_str(),
                     r.diagnostic.c_str());
}

// Resolve a dotted path ("faultmode.damping_x") inside the resolved config;
// it must name an existing numeric scalar.
json* locate_param(json& root, const std::string& path) {
    json* node = &root;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return node;
}

std::string value_tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int decimate) {
    gfm::LoadedScenario ls = gfm::load_scenario_file(config_path);
    if (decimate > 0) gfm::apply_decimate(ls, decimate);
    const RunOutcome r = execute_run(ls, config_path, out_dir);
    print_run_summary(ls.cfg.name, out_dir, r);
    return r.diverged ? kExitDiverged : kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& values, const std::string& out_dir,
              int decimate, int workers) {
    if (values.empty()) throw gfm::ConfigError("sweep needs at least one --values entry");
    gfm::LoadedScenario base = gfm::load_scenario_file(config_path);
    if (decimate > 0) gfm::apply_decimate(base, decimate);

    // Validate the parameter path and every value before running anything.
    std::vector<gfm::LoadedScenario> runs;
    for (double v : values) {
        json patched = base.resolved;
        json* slot = locate_param(patched, param);
        if (!slot)
            throw gfm::ConfigError("sweep parameter not found in config: " + param);
        if (!slot->is_number())
            throw gfm::ConfigError("sweep parameter is not a numeric scalar: " + param);
        *slot = v;
        runs.push_back(gfm::parse_scenario(
            patched.dump(), config_path + " [" + param + "=" + value_tag(v) + "]"));
    }

    const std::string leaf = param.substr(param.rfind('.') + 1);
    std::vector<fs::path> dirs;
    for (double v : values) dirs.push_back(fs::path(out_dir) / (leaf + "_" + value_tag(v)));

    std::vector<RunOutcome> outcomes(runs.size());
    std::vector<std::string> errors(runs.size());
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
        try {
            outcomes[i] = execute_run(runs[i], config_path, dirs[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    (void)workers;

    nlohmann::ordered_json summary;
    summary["schema_version"] = gfm::kMetricsSchemaVersion;
    summary["parameter"] = param;
    summary["runs"] = nlohmann::ordered_json::array();

    std::printf("%-12s %-10s %-10s %-9s %-8s %-9s %-10s %-9s\n", param.c_str(),
                "peak_i_c", "peak_iref", "limiter", "fm_evts", "final_p", "iq_swing",
                "p_settle");
    bool any_diverged = false;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!errors[i].empty()) {
            std::fprintf(stderr, "error: %s=%s: %s\n", param.c_str(),
                         value_tag(values[i]).c_str(), errors[i].c_str());
            any_diverged = true;
            continue;
        }
        const auto& m = outcomes[i].metrics;
        any_diverged |= outcomes[i].diverged;
        std::printf("%-12s %-10.4f %-10.4f %-9s %-8zu %-9.4f ", value_tag(values[i]).c_str(),
                    m.peak_i_c.value, m.peak_i_ref, m.limiter_engaged ? "yes" : "no",
                    m.fm_events.size(), m.final_p);
        if (m.recovery_iq_swing)
            std::printf("%-10.4f ", *m.recovery_iq_swing);
        else
            std::printf("%-10s ", "-");
        if (m.p_settling_time)
            std::printf("%-9.4f\n", *m.p_settling_time);
        else
            std::printf("%-9s\n", "-");

        nlohmann::ordered_json entry;
        entry["value"] = values[i];
        entry["dir"] = dirs[i].filename().string();
        entry["diverged"] = outcomes[i].diverged;
        entry["peak_i_c"] = m.peak_i_c.value;
        entry["peak_i_ref"] = m.peak_i_ref;
        entry["limiter_engaged"] = m.limiter_engaged;
        entry["final_p"] = m.final_p;
        entry["final_q"] = m.final_q;
        if (m.recovery_iq_swing) entry["recovery_iq_swing"] = *m.recovery_iq_swing;
        if (m.p_settling_time) entry["p_settling_time"] = *m.p_settling_time;
        summary["runs"].push_back(entry);
    }
    fs::create_directories(out_dir);
    gfm::write_text_file((fs::path(out_dir) / "sweep_summary.json").string(),
                         summary.dump(2) + "\n");

    for (const auto& e : errors)
        if (!e.empty()) return kExitSchema;
    return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_plot(const std::string& csv_path, const std::string& out_dir) {
    const std::string text = gfm::read_text_file(csv_path);
    const gfm::CsvTable table = gfm::parse_timeseries_csv(text, csv_path);
    const std::string title = fs::path(csv_path).stem().string();
    fs::create_directories(out_dir);
    for (const auto& [name, svg] : gfm::plot_panel_files(table, title)) {
        gfm::write_text_file((fs::path(out_dir) / name).string(), svg);
        std::printf("wrote %s\n", (fs::path(out_dir) / name).string().c_str());
    }
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    const gfm::LoadedScenario ls = gfm::load_scenario_file(config_path);
    const long steps =
        std::lround(ls.cfg.duration * ls.cfg.timing.f_control);
    std::printf("%s: valid\n", config_path.c_str());
    std::printf("  scenario %s, %.3f s, %ld control steps at %.0f Hz\n",
                ls.cfg.name.c_str(), ls.cfg.duration, steps, ls.cfg.timing.f_control);
    if (ls.cfg.fault.enabled)
        std::printf("  fault %.2f pu retained, on %.3f s, cleared %.3f s\n",
                    ls.cfg.fault.retained_voltage, ls.cfg.fault.t_on, ls.cfg.fault.t_clear);
    else
        std::printf("  no fault scheduled\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gfmsim: grid-forming converter fault ride-through simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", csv_path, param;
    std::vector<double> values;
    int decimate = 0;  // 0: keep the config's value
    int workers = 0;   // 0: library default

    CLI::App* run = app.add_subcommand("run", "simulate one scenario");
    run->add_option("--config", config_path, "scenario config or manifest")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--decimate", decimate, "record every Nth control step");

    CLI::App* sweep = app.add_subcommand("sweep", "simulate one scenario across parameter values");
    sweep->add_option("--config", config_path, "scenario config or manifest")->required();
    sweep->add_option("--param", param, "dotted config path, e.g. faultmode.damping_x")
        ->required();
    sweep->add_option("--values", values, "parameter values")->required()->delimiter(',');
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--decimate", decimate, "record every Nth control step");
    sweep->add_option("--workers", workers, "max concurrent runs (0 = auto)");

    CLI::App* plot = app.add_subcommand("plot", "render SVG panels from a timeseries CSV");
    plot->add_option("csv", csv_path, "timeseries.csv produced by run")->required();
    plot->add_option("--out", out_dir, "output directory");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("--config", config_path, "scenario config or manifest")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, decimate);
        if (sweep->parsed())
            return cmd_sweep(config_path, param, values, out_dir, decimate, workers);
        if (plot->parsed()) return cmd_plot(csv_path, out_dir);
        if (validate->parsed()) return cmd_validate(config_path);
    } catch (const gfm::FileError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitMissingFile;
    } catch (const gfm::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSchema;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
