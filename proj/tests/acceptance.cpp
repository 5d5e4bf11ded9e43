// Acceptance suite: one test case per release criterion, each printed as a
// single PASS/FAIL line by the listener below. Criteria 5 and 6 drive the
// actual CLI binary (path in $TOKENSIM_CLI, set by ctest).

#include "tokensim/chart.hpp"
#include "tokensim/config.hpp"
#include "tokensim/csv.hpp"
#include "tokensim/montecarlo.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

using namespace tokensim;
namespace fs = std::filesystem;

namespace {

class AcceptancePrinter : public Catch::EventListenerBase {
public:
    using Catch::EventListenerBase::EventListenerBase;

    void testCaseEnded(const Catch::TestCaseStats& stats) override {
        std::printf("ACCEPTANCE %s: %s\n", stats.testInfo->name.c_str(),
                    stats.totals.assertions.allOk() ? "PASS" : "FAIL");
        std::fflush(stdout);
    }
};

CATCH_REGISTER_LISTENER(AcceptancePrinter)

std::vector<ScenarioConfig> all_preset_configs() {
    std::vector<ScenarioConfig> configs = table1_preset();
    const std::vector<ScenarioConfig> second = table2_preset();
    configs.insert(configs.end(), second.begin(), second.end());
    return configs;
}

ScenarioConfig decay_only(ScenarioConfig cfg) {
    cfg.runs = 1;
    cfg.toggles = {false, false, false};
    return cfg;
}

struct CommandResult {
    int exit_code = -1;
    double seconds = 0.0;
};

CommandResult run_cli(const std::string& args, const fs::path& log,
                      const std::string& env_prefix = {}) {
    const char* cli = std::getenv("TOKENSIM_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd =
        env_prefix + std::string(cli) + " " + args + " > " + log.string() + " 2>&1";
    const auto start = std::chrono::steady_clock::now();
    const int status = std::system(cmd.c_str());
    const auto stop = std::chrono::steady_clock::now();
    CommandResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.seconds = std::chrono::duration<double>(stop - start).count();
    return result;
}

std::size_t count_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::size_t lines = 0;
    std::string buffer(1 << 20, '\0');
    while (in.read(buffer.data(), static_cast<std::streamsize>(buffer.size())) ||
           in.gcount() > 0) {
        lines += static_cast<std::size_t>(
            std::count(buffer.begin(), buffer.begin() + in.gcount(), '\n'));
    }
    return lines;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        REQUIRE(in);
        files[fs::relative(entry.path(), root).string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return files;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tokensim_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("C1 decay oracle") {
    const auto start = std::chrono::steady_clock::now();
    for (const ScenarioConfig& preset : all_preset_configs()) {
        const ScenarioConfig cfg = decay_only(preset);
        REQUIRE(build_economy(cfg, 0).pool().balance == cfg.initial_pool_xns);  // t = 0

        const RunResult run = simulate_run(cfg, 0);
        double worst = 0.0;
        for (const KpiRecord& rec : run.series) {
            const double expected = analytic_pool_balance(
                cfg.initial_pool_xns, cfg.decay_rate_per_day, static_cast<double>(rec.t));
            worst = std::max(worst, std::abs(rec.pool_balance_xns - expected) / expected);
        }
        CAPTURE(cfg.initial_pool_xns, cfg.decay_rate_per_day, worst);
        REQUIRE(worst <= 1e-9);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CAPTURE(seconds);
    REQUIRE(seconds < 5.0);
}

TEST_CASE("C2 two-year disbursement at fast decay") {
    ScenarioConfig cfg;
    cfg.initial_pool_xns = 1000e6;
    cfg.decay_rate_per_day = 0.01;
    cfg.timesteps = 730;
    cfg = decay_only(cfg);
    const RunResult run = simulate_run(cfg, 0);
    const double fraction = run.series.back().cum_subsidy_xns / cfg.initial_pool_xns;
    CAPTURE(fraction);  // analytic value 0.99932
    REQUIRE(fraction >= 0.999);
    REQUIRE(fraction < 1.0);
}

TEST_CASE("C3 long-tail residual at slow decay") {
    ScenarioConfig cfg;
    cfg.initial_pool_xns = 250e6;
    cfg.decay_rate_per_day = 0.0005;
    cfg.timesteps = 3652;
    cfg = decay_only(cfg);
    const RunResult run = simulate_run(cfg, 0);
    const double remaining = run.series.back().pool_balance_xns / cfg.initial_pool_xns;
    CAPTURE(remaining);  // analytic value 0.16106
    REQUIRE(remaining >= 0.155);
    REQUIRE(remaining <= 0.167);
}

TEST_CASE("C4 conservation across a full first-iteration scenario") {
    ScenarioConfig cfg;
    cfg.label = "table1";
    cfg.initial_pool_xns = 250e6;
    cfg.decay_rate_per_day = 0.0005;
    cfg.timesteps = 3652;
    cfg.runs = 100;  // all features enabled

    const double supply = cfg.economy.total_supply;
    double worst = 0.0;
    std::size_t audited = 0;
    const StepObserver observer = [&](std::uint64_t, const EconomySim& sim, const KpiRecord&) {
        worst = std::max(worst, std::abs(sim.total_xns() - supply) / supply);
        ++audited;
    };
    for (std::uint64_t r = 0; r < static_cast<std::uint64_t>(cfg.runs); ++r) {
        simulate_run(cfg, r, &observer);
    }
    REQUIRE(audited == static_cast<std::size_t>(cfg.runs) * 3652);
    CAPTURE(worst);
    REQUIRE(worst <= 1e-6);
}

TEST_CASE("C5 protocol fidelity of the preset sweeps") {
    struct Preset {
        const char* name;
        std::vector<double> pool_sizes;
        const char* lambda;
    };
    const Preset presets[] = {
        {"table1", {250e6, 500e6, 750e6, 1000e6}, "0.0005"},
        {"table2", {10e6, 50e6, 250e6, 500e6, 750e6, 1000e6}, "0.01"},
    };

    for (const Preset& preset : presets) {
        const fs::path out = scratch_dir(std::string("c5_") + preset.name);
        const CommandResult res = run_cli(
            "sweep --preset " + std::string(preset.name) + " --out " + out.string(),
            out / "cli.log");
        CAPTURE(preset.name, res.exit_code, res.seconds);
        REQUIRE(res.exit_code == 0);
        REQUIRE(res.seconds < 300.0);

        std::size_t csvs = 0;
        std::size_t charts = 0;
        for (const auto& entry : fs::directory_iterator(out)) {
            if (entry.path().extension() == ".csv") ++csvs;
            if (entry.path().extension() == ".svg") ++charts;
        }
        REQUIRE(csvs == 2 * preset.pool_sizes.size());
        REQUIRE(charts == 6);

        for (const double a0 : preset.pool_sizes) {
            const std::string stem = std::string(preset.name) + "_" +
                                     std::to_string(static_cast<long long>(a0)) + "_" +
                                     preset.lambda;
            const fs::path runs_csv = out / (stem + "_runs.csv");
            const fs::path mean_csv = out / (stem + "_mean.csv");
            REQUIRE(fs::exists(runs_csv));
            REQUIRE(fs::exists(mean_csv));
            // 100 runs x 3652 steps plus the header.
            REQUIRE(count_lines(runs_csv) == 100 * 3652 + 1);
            REQUIRE(count_lines(mean_csv) == 3 * 3652 + 1);

            std::ifstream header_in(runs_csv);
            std::string header;
            std::getline(header_in, header);
            REQUIRE(header == kCsvHeader);
            for (const std::string_view outcome :
                 {"pool_balance_xns", "cum_subsidy_xns", "cum_subsidy_usd", "price_usd",
                  "treasury_xns", "treasury_usd"}) {
                REQUIRE(header.find(outcome) != std::string::npos);
            }
        }
        fs::remove_all(out);
    }
}

TEST_CASE("C6 determinism of the output tree") {
    const fs::path base = scratch_dir("c6");
    const fs::path cfg_a = base / "a.json";
    const fs::path cfg_b = base / "b.json";
    {
        std::ofstream out(cfg_a);
        out << R"({"scenario": {"initial_pool_xns": 20e6, "decay_rate_per_day": 0.01,
                   "timesteps": 500, "runs": 6}})";
    }
    {
        std::ofstream out(cfg_b);
        out << R"({"scenario": {"initial_pool_xns": 80e6, "decay_rate_per_day": 0.01,
                   "timesteps": 500, "runs": 6}})";
    }
    const std::string configs = cfg_a.string() + " " + cfg_b.string();

    const fs::path out1 = base / "out1";
    const fs::path out2 = base / "out2";
    const fs::path out3 = base / "out3";
    REQUIRE(run_cli("sweep --configs " + configs + " --seed 42 --jobs 2 --out " + out1.string(),
                    base / "log1.txt")
                .exit_code == 0);
    REQUIRE(run_cli("sweep --configs " + configs + " --seed 42 --jobs 2 --out " + out2.string(),
                    base / "log2.txt")
                .exit_code == 0);
    REQUIRE(run_cli("sweep --configs " + configs + " --seed 42 --jobs 1 --out " + out3.string(),
                    base / "log3.txt")
                .exit_code == 0);

    const auto tree1 = read_tree(out1);
    const auto tree2 = read_tree(out2);
    const auto tree3 = read_tree(out3);
    REQUIRE(tree1.size() > 0);
    // Identical argv: byte-identical tree. Forced-serial: byte-identical too.
    REQUIRE(tree1 == tree2);
    REQUIRE(tree1 == tree3);
    fs::remove_all(base);
}

TEST_CASE("C7 engine equivalence properties") {
    const AddressId a{1}, b{2}, c{3}, d{4};
    const AddressId owners[] = {a, b, c, d};
    MechanismSet mechs;
    mechs.register_mechanism(make_transfer_mechanism());
    auto transfer = [](AddressId agent, AddressId from, AddressId to, double amount) {
        return Transaction{agent, "transfer_balance", Action(TransferAction{from, to, amount})};
    };

    RngStream rng(0xACCE97);
    std::size_t fold_cases = 0, commute_cases = 0, rejection_cases = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        GlobalState state;
        for (const AddressId owner : owners) {
            state.declare({owner, owner, "balance", Unit::Xns,
                           static_cast<double>(rng.next_u64() % 120)});
        }

        std::vector<Transaction> txs;
        const int n = 2 + static_cast<int>(rng.next_u64() % 8);
        for (int i = 0; i < n; ++i) {
            const AddressId from = owners[rng.next_u64() % 4];
            const AddressId to = owners[rng.next_u64() % 4];
            const AddressId agent = (rng.next_u64() % 6 == 0) ? owners[rng.next_u64() % 4] : from;
            txs.push_back(transfer(agent, from, to, static_cast<double>(rng.next_u64() % 70)));
        }

        GlobalState folded = state;
        for (const Transaction& tx : txs) {
            auto [next, vr] = apply_transaction(folded, mechs, tx);
            if (vr.ok()) folded = std::move(next);
        }
        if (!(apply_block(state, mechs, txs).state == folded)) {
            FAIL("block application diverged from the transaction fold");
        }
        ++fold_cases;

        // Amounts within half the source balances keep both orders valid, so
        // every iteration exercises the commutativity property.
        const auto bounded = [&rng, &state](AddressId owner) {
            const double balance = state.value(owner, "balance");
            return std::floor(balance / 2.0) > 0.0
                       ? static_cast<double>(rng.next_u64() %
                                             static_cast<std::uint64_t>(balance / 2.0 + 1.0))
                       : 0.0;
        };
        const Transaction left = transfer(a, a, b, bounded(a));
        const Transaction right = transfer(c, c, d, bounded(c));
        const CommuteResult cr = commutes(state, mechs, left, right);
        if (!cr.both_orders_valid) FAIL("bounded disjoint transfers should be valid");
        if (!cr.commutes) FAIL("disjoint transfers failed to commute");
        ++commute_cases;

        const Transaction bad = transfer(a, a, b, 1e12);
        auto [next, vr] = apply_transaction(state, mechs, bad);
        if (vr.ok() || !(next == state)) FAIL("rejected transaction touched the state");
        ++rejection_cases;
    }
    REQUIRE(fold_cases == 1000);
    REQUIRE(rejection_cases == 1000);
    REQUIRE(commute_cases == 1000);
}

TEST_CASE("C8 accounting identity across all preset scenarios") {
    for (const ScenarioConfig& preset : all_preset_configs()) {
        ScenarioConfig cfg = preset;
        cfg.runs = 1;  // all features stay enabled
        EconomySim sim = build_economy(cfg, derive_run_seed(cfg.master_seed, 0));
        double worst = 0.0;
        for (std::int64_t t = 0; t < cfg.timesteps; ++t) {
            const KpiRecord rec = sim.step();
            const double identity = rec.cum_subsidy_xns + rec.pool_balance_xns -
                                    sim.pool().cumulative_replenished;
            worst = std::max(worst,
                             std::abs(identity - cfg.initial_pool_xns) / cfg.initial_pool_xns);
        }
        CAPTURE(cfg.initial_pool_xns, cfg.decay_rate_per_day, worst);
        REQUIRE(worst <= 1e-9);
    }
}

TEST_CASE("C9 pool size moves the price under the default behavior") {
    std::vector<double> final_prices;
    for (const ScenarioConfig& preset : table2_preset()) {
        ScenarioConfig cfg = preset;
        cfg.runs = 1;
        cfg.toggles.noise = false;  // isolate the deterministic coupling
        final_prices.push_back(simulate_run(cfg, 0).series.back().price_usd);
    }
    const double lo = *std::min_element(final_prices.begin(), final_prices.end());
    const double hi = *std::max_element(final_prices.begin(), final_prices.end());
    CAPTURE(lo, hi);
    REQUIRE(hi > 0.0);
    REQUIRE((hi - lo) / hi > 0.01);  // at least two scenarios differ by > 1%
}

TEST_CASE("CLI contract details") {
    const fs::path base = scratch_dir("cli_contract");
    const fs::path good_cfg = base / "good.json";
    const fs::path bad_cfg = base / "bad.json";
    {
        std::ofstream out(good_cfg);
        out << R"({"scenario": {"initial_pool_xns": 1000e6, "decay_rate_per_day": 0.01,
                   "timesteps": 730, "runs": 1}})";
    }
    {
        std::ofstream out(bad_cfg);
        out << R"({"scenario": {"initial_pool_xns": 1e6, "decayrate": 0.01}})";
    }

    SECTION("validate reports key-path diagnostics with a nonzero exit") {
        const fs::path log = base / "validate.log";
        REQUIRE(run_cli("validate --config " + bad_cfg.string(), log).exit_code != 0);
        std::ifstream in(log);
        const std::string output{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};
        REQUIRE(output.find("scenario.decayrate") != std::string::npos);
        REQUIRE(run_cli("validate --config " + good_cfg.string(), log).exit_code == 0);
    }
    SECTION("missing required flags exit nonzero") {
        REQUIRE(run_cli("simulate", base / "usage.log").exit_code != 0);
        REQUIRE(run_cli("sweep", base / "usage.log").exit_code != 0);
    }
    SECTION("TOKENSIM_OUT provides the default output directory") {
        const fs::path env_out = base / "env_out";
        fs::create_directories(env_out);
        const CommandResult res =
            run_cli("simulate --config " + good_cfg.string(), base / "env.log",
                    "TOKENSIM_OUT=" + env_out.string() + " ");
        REQUIRE(res.exit_code == 0);
        REQUIRE(fs::exists(env_out / "good_1000000000_0.01_runs.csv"));
    }
    SECTION("simulate with all toggles off reproduces the analytic pool column") {
        const CommandResult res = run_cli("simulate --config " + good_cfg.string() +
                                              " --no-noise --no-replenish --no-behavior --out " +
                                              base.string(),
                                          base / "sim.log");
        REQUIRE(res.exit_code == 0);
        const std::vector<CsvSeries> parsed =
            parse_timeseries_csv(base / "good_1000000000_0.01_runs.csv");
        REQUIRE(parsed.size() == 1);
        REQUIRE(parsed.front().series.size() == 730);
        for (const KpiRecord& rec : parsed.front().series) {
            const double expected =
                analytic_pool_balance(1000e6, 0.01, static_cast<double>(rec.t));
            REQUIRE(std::abs(rec.pool_balance_xns - expected) / expected <= 1e-9);
        }
    }
    fs::remove_all(base);
}

TEST_CASE("C10 monte carlo statistics") {
    SECTION("poisson sample mean at mu=3") {
        RngStream rng(derive_run_seed(kDefaultMasterSeed, 17));
        double sum = 0.0;
        for (int i = 0; i < 10000; ++i) sum += static_cast<double>(developer_arrivals(3.0, rng));
        const double mean = sum / 10000.0;
        CAPTURE(mean);
        REQUIRE(mean >= 2.9);
        REQUIRE(mean <= 3.1);
    }
    SECTION("aggregate mean matches the hand-averaged fixture exactly") {
        auto rec = [](double pool, double price, double users) {
            KpiRecord r;
            r.t = 1;
            r.pool_balance_xns = pool;
            r.price_usd = price;
            r.n_users = users;
            return r;
        };
        const std::vector<RunResult> runs{
            {0, {rec(1.5, 0.25, 100.0)}},
            {1, {rec(2.5, 0.50, 250.0)}},
            {2, {rec(5.0, 0.75, 400.0)}},
        };
        const AggregateResult agg = aggregate_mean(runs);
        REQUIRE(agg.mean.front().pool_balance_xns == 3.0);
        REQUIRE(agg.mean.front().price_usd == 0.5);
        REQUIRE(agg.mean.front().n_users == 250.0);
    }
}
