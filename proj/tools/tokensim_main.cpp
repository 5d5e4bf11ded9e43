// tokensim CLI: seeded simulation of token-economy scenarios, preset
// parameter sweeps, and chart/CSV emission. Identical argv (including the
// seed) always produces a byte-identical output tree.

#include "tokensim/chart.hpp"
#include "tokensim/config.hpp"
#include "tokensim/csv.hpp"
#include "tokensim/montecarlo.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tokensim;

namespace {

fs::path resolve_out_dir(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("TOKENSIM_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

std::string format_number(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 9e15) {
        return std::to_string(static_cast<long long>(v));
    }
    // Shortest fixed-notation round-trip, e.g. 0.0005 rather than 5e-04.
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    return std::string(buf, ptr);
}

std::string scenario_stem(const ScenarioConfig& config) {
    return config.label + "_" + format_number(config.initial_pool_xns) + "_" +
           format_number(config.decay_rate_per_day);
}

/// Runs one scenario and writes <stem>_runs.csv and <stem>_mean.csv.
AggregateResult emit_scenario(const ScenarioConfig& config, const fs::path& out_dir,
                              unsigned jobs) {
    const std::vector<RunResult> results = run_scenario(config, jobs);
    const AggregateResult aggregate = aggregate_mean(config, results);

    const std::string stem = scenario_stem(config);
    const fs::path runs_path = out_dir / (stem + "_runs.csv");
    const fs::path mean_path = out_dir / (stem + "_mean.csv");
    const std::size_t runs_bytes = write_timeseries_csv(results, runs_path);
    const std::size_t mean_bytes = write_aggregate_csv(aggregate, mean_path);

    std::cout << stem << ": " << config.runs << " runs x " << config.timesteps << " steps -> "
              << runs_path.string() << " (" << runs_bytes << " bytes), " << mean_path.string()
              << " (" << mean_bytes << " bytes)\n";
    return aggregate;
}

// The six tracked outcome charts emitted per sweep.
constexpr std::array<std::string_view, 6> kSweepChartVariables = {
    "pool_balance_xns", "cum_subsidy_xns", "cum_subsidy_usd",
    "price_usd",        "treasury_xns",    "treasury_usd",
};

struct SimulateOptions {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 0;
    bool no_noise = false;
    bool no_replenish = false;
    bool no_behavior = false;
};

int run_simulate(const SimulateOptions& opt) {
    ScenarioConfig config = load_scenario_config(opt.config_path);
    if (opt.seed.has_value()) config.master_seed = *opt.seed;
    if (opt.no_noise) config.toggles.noise = false;
    if (opt.no_replenish) config.toggles.replenish = false;
    if (opt.no_behavior) config.toggles.behavior = false;
    config.validate();

    const fs::path out_dir = resolve_out_dir(opt.out);
    fs::create_directories(out_dir);
    emit_scenario(config, out_dir, opt.jobs);
    return 0;
}

struct SweepOptions {
    std::string preset;
    std::vector<std::string> config_paths;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 0;
};

int run_sweep_cmd(const SweepOptions& opt) {
    std::vector<ScenarioConfig> configs;
    std::string chart_label;
    if (!opt.preset.empty()) {
        const std::uint64_t seed = opt.seed.value_or(kDefaultMasterSeed);
        if (opt.preset == "table1") {
            configs = table1_preset(seed);
        } else if (opt.preset == "table2") {
            configs = table2_preset(seed);
        } else {
            std::cerr << "error: unknown preset '" << opt.preset << "' (expected table1 or table2)\n";
            return 1;
        }
        chart_label = opt.preset;
    } else {
        for (const std::string& path : opt.config_paths) {
            ScenarioConfig config = load_scenario_config(path);
            if (opt.seed.has_value()) config.master_seed = *opt.seed;
            configs.push_back(std::move(config));
        }
        chart_label = "sweep";
    }

    const fs::path out_dir = resolve_out_dir(opt.out);
    fs::create_directories(out_dir);

    std::vector<AggregateResult> aggregates;
    int failures = 0;
    for (const ScenarioConfig& config : configs) {
        try {
            aggregates.push_back(emit_scenario(config, out_dir, opt.jobs));
        } catch (const std::exception& ex) {
            ++failures;
            std::cerr << "error: scenario " << scenario_stem(config) << " failed: " << ex.what()
                      << "\n";
        }
    }

    if (!aggregates.empty()) {
        for (const std::string_view variable : kSweepChartVariables) {
            const fs::path chart_path =
                out_dir / (chart_label + "_" + std::string(variable) + ".svg");
            render_line_chart(aggregates, variable, chart_path);
            std::cout << "chart: " << chart_path.string() << "\n";
        }
    }
    return failures == 0 ? 0 : 1;
}

struct PlotOptions {
    std::vector<std::string> inputs;
    std::string variable;
    std::string out_path;
};

int run_plot(const PlotOptions& opt) {
    std::vector<ChartSeries> series;
    for (const std::string& input : opt.inputs) {
        const std::vector<CsvSeries> parsed = parse_timeseries_csv(input);
        if (parsed.empty()) throw IoError("no data rows in " + input);
        // Prefer the mean series of aggregate files; otherwise the first run.
        const CsvSeries* chosen = &parsed.front();
        for (const CsvSeries& s : parsed) {
            if (s.run_label == "mean") {
                chosen = &s;
                break;
            }
        }
        ChartSeries cs;
        cs.label = fs::path(input).stem().string();
        for (const KpiRecord& rec : chosen->series) {
            cs.x.push_back(static_cast<double>(rec.t));
            cs.y.push_back(kpi_value(rec, opt.variable));
        }
        series.push_back(std::move(cs));
    }
    const std::string y_label =
        opt.variable + " [" + std::string(kpi_unit(opt.variable)) + "]";
    render_line_chart(series, opt.variable, "day", y_label, opt.out_path);
    std::cout << "chart: " << opt.out_path << "\n";
    return 0;
}

int run_validate(const std::string& config_path) {
    const ScenarioConfig config = load_scenario_config(config_path);
    config.validate();
    std::cout << "OK: " << config_path << "\n" << dump_scenario_config(config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokensim: deterministic, seed-reproducible token economy simulation"};
    app.require_subcommand(1);

    SimulateOptions sim_opt;
    CLI::App* simulate = app.add_subcommand("simulate", "Run one scenario and write its CSVs");
    simulate->add_option("--config", sim_opt.config_path, "Scenario config file (JSON)")
        ->required();
    std::uint64_t sim_seed = 0;
    CLI::Option* sim_seed_opt =
        simulate->add_option("--seed", sim_seed, "Override the master seed");
    simulate->add_option("--out", sim_opt.out, "Output directory (default: $TOKENSIM_OUT or .)");
    simulate->add_option("--jobs", sim_opt.jobs, "Worker threads (0 = hardware, 1 = serial)");
    simulate->add_flag("--no-noise", sim_opt.no_noise, "Disable stochastic draws");
    simulate->add_flag("--no-replenish", sim_opt.no_replenish,
                       "Route platform fees to the treasury instead of the pool");
    simulate->add_flag("--no-behavior", sim_opt.no_behavior,
                       "Disable the adoption/fee layer (pure pool decay)");

    SweepOptions sweep_opt;
    CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario sweep with CSVs and charts");
    CLI::Option* preset_opt =
        sweep->add_option("--preset", sweep_opt.preset, "Preset grid: table1 or table2");
    CLI::Option* configs_opt =
        sweep->add_option("--configs", sweep_opt.config_paths, "Scenario config files");
    preset_opt->excludes(configs_opt);
    std::uint64_t sweep_seed = 0;
    CLI::Option* sweep_seed_opt =
        sweep->add_option("--seed", sweep_seed, "Override the master seed");
    sweep->add_option("--out", sweep_opt.out, "Output directory (default: $TOKENSIM_OUT or .)");
    sweep->add_option("--jobs", sweep_opt.jobs, "Worker threads (0 = hardware, 1 = serial)");

    PlotOptions plot_opt;
    CLI::App* plot = app.add_subcommand("plot", "Render one variable from emitted CSVs");
    plot->add_option("--in", plot_opt.inputs, "Input CSV files")->required()->expected(-1);
    plot->add_option("--var", plot_opt.variable, "Variable (CSV column name)")->required();
    plot->add_option("--out", plot_opt.out_path, "Output SVG path")->required();

    std::string validate_config;
    CLI::App* validate = app.add_subcommand("validate", "Parse and validate a config file");
    validate->add_option("--config", validate_config, "Scenario config file (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            if (sim_seed_opt->count() > 0) sim_opt.seed = sim_seed;
            return run_simulate(sim_opt);
        }
        if (sweep->parsed()) {
            if (sweep_seed_opt->count() > 0) sweep_opt.seed = sweep_seed;
            if (sweep_opt.preset.empty() && sweep_opt.config_paths.empty()) {
                std::cerr << "error: sweep requires --preset or --configs\n";
                return 1;
            }
            return run_sweep_cmd(sweep_opt);
        }
        if (plot->parsed()) return run_plot(plot_opt);
        if (validate->parsed()) return run_validate(validate_config);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
