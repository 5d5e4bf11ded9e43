#include "tokensim/montecarlo.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

using namespace tokensim;
using Catch::Matchers::WithinRel;

namespace {

ScenarioConfig small_config(double a0 = 20e6, double lambda = 0.01) {
    ScenarioConfig cfg;
    cfg.label = "test";
    cfg.initial_pool_xns = a0;
    cfg.decay_rate_per_day = lambda;
    cfg.timesteps = 120;
    cfg.runs = 6;
    cfg.master_seed = 404;
    return cfg;
}

bool records_equal(const KpiRecord& a, const KpiRecord& b) {
    return a.t == b.t && a.pool_balance_xns == b.pool_balance_xns &&
           a.cum_subsidy_xns == b.cum_subsidy_xns && a.cum_subsidy_usd == b.cum_subsidy_usd &&
           a.price_usd == b.price_usd && a.treasury_xns == b.treasury_xns &&
           a.treasury_usd == b.treasury_usd && a.n_developers == b.n_developers &&
           a.n_users == b.n_users && a.fees_usd == b.fees_usd;
}

bool runs_equal(const RunResult& a, const RunResult& b) {
    if (a.run_id != b.run_id || a.series.size() != b.series.size()) return false;
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        if (!records_equal(a.series[i], b.series[i])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("run_scenario basics") {
    const ScenarioConfig cfg = small_config();

    SECTION("a single run equals the direct trajectory") {
        ScenarioConfig one = cfg;
        one.runs = 1;
        const std::vector<RunResult> results = run_scenario(one, 1);
        REQUIRE(results.size() == 1);
        REQUIRE(runs_equal(results.front(), simulate_run(one, 0)));
        REQUIRE(results.front().series.size() == static_cast<std::size_t>(one.timesteps));
    }
    SECTION("noise off collapses all runs onto one trajectory") {
        ScenarioConfig quiet = cfg;
        quiet.toggles.noise = false;
        const std::vector<RunResult> results = run_scenario(quiet, 2);
        for (std::size_t r = 1; r < results.size(); ++r) {
            RunResult relabeled = results[r];
            relabeled.run_id = 0;
            REQUIRE(runs_equal(relabeled, results[0]));
        }
    }
    SECTION("with behavior and replenishment off the pool follows the analytic curve") {
        ScenarioConfig decay = cfg;
        decay.runs = 1;
        decay.timesteps = 400;
        decay.toggles = {false, false, false};
        const RunResult run = simulate_run(decay, 0);
        for (const KpiRecord& rec : run.series) {
            REQUIRE_THAT(rec.pool_balance_xns,
                         WithinRel(analytic_pool_balance(decay.initial_pool_xns,
                                                         decay.decay_rate_per_day,
                                                         static_cast<double>(rec.t)),
                                   1e-9));
        }
    }
    SECTION("parallel and serial execution are bitwise identical") {
        const std::vector<RunResult> serial = run_scenario(cfg, 1);
        const std::vector<RunResult> parallel = run_scenario(cfg, 3);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t r = 0; r < serial.size(); ++r) {
            REQUIRE(runs_equal(serial[r], parallel[r]));
        }
    }
    SECTION("runs are independent of the total run count") {
        ScenarioConfig more = cfg;
        more.runs = 3;
        const std::vector<RunResult> few = run_scenario(more, 2);
        more.runs = 6;
        const std::vector<RunResult> many = run_scenario(more, 2);
        for (std::size_t r = 0; r < 3; ++r) REQUIRE(runs_equal(few[r], many[r]));
    }
}

TEST_CASE("aggregate_mean") {
    SECTION("mean of identical runs equals any single run") {
        ScenarioConfig quiet = small_config();
        quiet.toggles.noise = false;
        quiet.runs = 4;
        quiet.timesteps = 60;
        const std::vector<RunResult> results = run_scenario(quiet, 1);
        const AggregateResult agg = aggregate_mean(results);
        for (std::size_t t = 0; t < agg.mean.size(); ++t) {
            REQUIRE(records_equal(agg.mean[t], results[0].series[t]));
            REQUIRE(records_equal(agg.env_min[t], results[0].series[t]));
            REQUIRE(records_equal(agg.env_max[t], results[0].series[t]));
        }
    }
    SECTION("two runs average element-wise") {
        RunResult a{0, {KpiRecord{1, 10.0, 0, 0, 0, 0, 0, 0, 0, 0}}};
        RunResult b{1, {KpiRecord{1, 20.0, 0, 0, 0, 0, 0, 0, 0, 0}}};
        const std::vector<RunResult> runs{a, b};
        const AggregateResult agg = aggregate_mean(runs);
        REQUIRE(agg.mean.front().pool_balance_xns == 15.0);
        REQUIRE(agg.env_min.front().pool_balance_xns == 10.0);
        REQUIRE(agg.env_max.front().pool_balance_xns == 20.0);
    }
    SECTION("three-run fixture matches the externally averaged values") {
        // Fixture rows and expected means computed by hand in a spreadsheet;
        // values are chosen to average exactly in binary.
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
        REQUIRE(agg.mean.front().pool_balance_xns == 3.0);  // (1.5+2.5+5.0)/3
        REQUIRE(agg.mean.front().price_usd == 0.5);         // (0.25+0.50+0.75)/3
        REQUIRE(agg.mean.front().n_users == 250.0);         // (100+250+400)/3
        REQUIRE(agg.env_min.front().pool_balance_xns == 1.5);
        REQUIRE(agg.env_max.front().pool_balance_xns == 5.0);
    }
    SECTION("ragged series are rejected") {
        RunResult a{0, {KpiRecord{}, KpiRecord{}}};
        RunResult b{1, {KpiRecord{}}};
        const std::vector<RunResult> runs{a, b};
        REQUIRE_THROWS_AS(aggregate_mean(runs), EconomyError);
    }
    SECTION("permutation invariance, bit for bit") {
        ScenarioConfig cfg = small_config();
        cfg.runs = 5;
        cfg.timesteps = 50;
        std::vector<RunResult> results = run_scenario(cfg, 1);
        const AggregateResult base = aggregate_mean(results);

        std::mt19937 shuffler(7);
        for (int round = 0; round < 5; ++round) {
            std::shuffle(results.begin(), results.end(), shuffler);
            const AggregateResult shuffled = aggregate_mean(results);
            for (std::size_t t = 0; t < base.mean.size(); ++t) {
                REQUIRE(records_equal(base.mean[t], shuffled.mean[t]));
            }
        }
    }
}

TEST_CASE("experiment presets") {
    SECTION("first-iteration grid: four pool sizes, slow decay") {
        const std::vector<ScenarioConfig> grid = table1_preset();
        REQUIRE(grid.size() == 4);
        const double expected[] = {250e6, 500e6, 750e6, 1000e6};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            REQUIRE(grid[i].initial_pool_xns == expected[i]);
            REQUIRE(grid[i].decay_rate_per_day == 0.0005);
            REQUIRE(grid[i].timesteps == 3652);
            REQUIRE(grid[i].runs == 100);
        }
    }
    SECTION("second-iteration grid: six pool sizes, fast decay") {
        const std::vector<ScenarioConfig> grid = table2_preset();
        REQUIRE(grid.size() == 6);
        const double expected[] = {10e6, 50e6, 250e6, 500e6, 750e6, 1000e6};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            REQUIRE(grid[i].initial_pool_xns == expected[i]);
            REQUIRE(grid[i].decay_rate_per_day == 0.01);
            REQUIRE(grid[i].timesteps == 3652);
            REQUIRE(grid[i].runs == 100);
        }
    }
}

TEST_CASE("run_sweep") {
    SECTION("one aggregate per scenario") {
        std::vector<ScenarioConfig> configs{small_config(20e6), small_config(80e6)};
        const std::vector<SweepEntry> entries = run_sweep(configs, 2);
        REQUIRE(entries.size() == 2);
        for (const SweepEntry& entry : entries) {
            REQUIRE(entry.error.empty());
            REQUIRE(entry.aggregate.has_value());
            REQUIRE(entry.aggregate->mean.size() == 120);
        }
        REQUIRE(entries[0].aggregate->initial_pool_xns == 20e6);
        REQUIRE(entries[1].aggregate->initial_pool_xns == 80e6);
    }
    SECTION("sweeping one config equals run_scenario plus aggregate_mean") {
        const ScenarioConfig cfg = small_config();
        const std::vector<ScenarioConfig> configs{cfg};
        const std::vector<SweepEntry> entries = run_sweep(configs, 2);
        const AggregateResult direct = aggregate_mean(cfg, run_scenario(cfg, 1));
        REQUIRE(entries.front().aggregate.has_value());
        const AggregateResult& swept = *entries.front().aggregate;
        REQUIRE(swept.mean.size() == direct.mean.size());
        for (std::size_t t = 0; t < direct.mean.size(); ++t) {
            REQUIRE(records_equal(swept.mean[t], direct.mean[t]));
        }
    }
    SECTION("a failing scenario does not poison the others") {
        ScenarioConfig bad = small_config();
        bad.initial_pool_xns = 5e9;  // exceeds the total supply
        std::vector<ScenarioConfig> configs{bad, small_config()};
        const std::vector<SweepEntry> entries = run_sweep(configs, 1);
        REQUIRE_FALSE(entries[0].error.empty());
        REQUIRE_FALSE(entries[0].aggregate.has_value());
        REQUIRE(entries[1].error.empty());
        REQUIRE(entries[1].aggregate.has_value());
    }
}
