#pragma once

// Seeded Monte Carlo execution of economy scenarios. Runs are fully
// independent (own ledger, own counter-derived seed), so any worker count
// produces byte-identical results merged in run-id order.

#include "tokensim/economy.hpp"
#include "tokensim/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace tokensim {

inline constexpr std::uint64_t kDefaultMasterSeed = 1;

/// One experiment: pool size, decay rate, horizon, and run count, plus the
/// economy parameters and feature toggles.
struct ScenarioConfig {
    std::string label = "custom";
    double initial_pool_xns = 250e6;
    double decay_rate_per_day = 0.0005;
    std::int64_t timesteps = 3652;
    std::int64_t runs = 100;
    std::uint64_t master_seed = kDefaultMasterSeed;
    EconomyParams economy;
    EconomyToggles toggles;

    void validate() const {
        economy.validate();
        if (!(initial_pool_xns >= 0.0)) throw EconomyError("scenario: initial pool must be >= 0");
        if (initial_pool_xns > economy.total_supply) {
            throw EconomyError("scenario: initial pool exceeds total supply");
        }
        if (!(decay_rate_per_day > 0.0)) throw EconomyError("scenario: decay rate must be > 0");
        if (timesteps < 1) throw EconomyError("scenario: timesteps must be >= 1");
        if (runs < 1) throw EconomyError("scenario: runs must be >= 1");
    }
};

struct RunResult {
    std::uint64_t run_id = 0;
    std::vector<KpiRecord> series;  // one record per timestep, t = 1..timesteps
};

/// Cross-run aggregate: element-wise mean plus a min/max envelope (the
/// envelope is an extension beyond the mean protocol; it makes the Monte
/// Carlo spread visible).
struct AggregateResult {
    std::string label;
    double initial_pool_xns = 0.0;
    double decay_rate_per_day = 0.0;
    std::vector<KpiRecord> mean;
    std::vector<KpiRecord> env_min;
    std::vector<KpiRecord> env_max;
};

/// Builds the seeded economy for one run of a scenario.
inline EconomySim build_economy(const ScenarioConfig& config, std::uint64_t run_seed) {
    config.validate();
    return EconomySim(config.initial_pool_xns, config.decay_rate_per_day, config.economy,
                      config.toggles, run_seed);
}

/// Optional per-step hook, e.g. for conservation audits.
using StepObserver = std::function<void(std::uint64_t run_id, const EconomySim&, const KpiRecord&)>;

/// Executes a single run of the scenario.
inline RunResult simulate_run(const ScenarioConfig& config, std::uint64_t run_id,
                              const StepObserver* observer = nullptr) {
    EconomySim sim = build_economy(config, derive_run_seed(config.master_seed, run_id));
    RunResult result;
    result.run_id = run_id;
    result.series.reserve(static_cast<std::size_t>(config.timesteps));
    for (std::int64_t t = 0; t < config.timesteps; ++t) {
        result.series.push_back(sim.step());
        if (observer != nullptr && *observer) {
            (*observer)(run_id, sim, result.series.back());
        }
    }
    return result;
}

/// Executes all runs of the scenario. `jobs` = 0 picks the hardware
/// concurrency; any value produces identical results because runs share no
/// state and land in run-id order.
inline std::vector<RunResult> run_scenario(const ScenarioConfig& config, unsigned jobs = 0) {
    config.validate();
    const auto runs = static_cast<std::uint64_t>(config.runs);
    std::vector<RunResult> results(runs);

    unsigned workers = jobs != 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, runs));

    if (workers <= 1) {
        for (std::uint64_t r = 0; r < runs; ++r) results[r] = simulate_run(config, r);
        return results;
    }

    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        for (std::uint64_t r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
            results[r] = simulate_run(config, r);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return results;
}

namespace detail {

template <class Member>
inline void aggregate_field(std::vector<KpiRecord>& mean, std::vector<KpiRecord>& lo,
                            std::vector<KpiRecord>& hi, std::span<const RunResult> results,
                            Member member) {
    std::vector<double> cell(results.size());
    for (std::size_t t = 0; t < mean.size(); ++t) {
        for (std::size_t r = 0; r < results.size(); ++r) {
            cell[r] = results[r].series[t].*member;
        }
        // Sorting before summation makes the mean invariant under input
        // permutation, bit-for-bit.
        std::sort(cell.begin(), cell.end());
        double sum = 0.0;
        for (const double v : cell) sum += v;
        mean[t].*member = sum / static_cast<double>(cell.size());
        lo[t].*member = cell.front();
        hi[t].*member = cell.back();
    }
}

}  // namespace detail

/// Element-wise arithmetic mean (and min/max envelope) across runs.
inline AggregateResult aggregate_mean(std::span<const RunResult> results) {
    if (results.empty()) throw EconomyError("aggregate_mean: no runs");
    const std::size_t len = results.front().series.size();
    for (const RunResult& run : results) {
        if (run.series.size() != len) {
            throw EconomyError("aggregate_mean: ragged series lengths");
        }
    }

    AggregateResult agg;
    agg.mean.resize(len);
    agg.env_min.resize(len);
    agg.env_max.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
        const std::int64_t day = results.front().series[t].t;
        agg.mean[t].t = day;
        agg.env_min[t].t = day;
        agg.env_max[t].t = day;
    }

    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results,
                            &KpiRecord::pool_balance_xns);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results,
                            &KpiRecord::cum_subsidy_xns);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results,
                            &KpiRecord::cum_subsidy_usd);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::price_usd);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::treasury_xns);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::treasury_usd);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::n_developers);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::n_users);
    detail::aggregate_field(agg.mean, agg.env_min, agg.env_max, results, &KpiRecord::fees_usd);
    return agg;
}

inline AggregateResult aggregate_mean(const ScenarioConfig& config,
                                      std::span<const RunResult> results) {
    AggregateResult agg = aggregate_mean(results);
    agg.label = config.label;
    agg.initial_pool_xns = config.initial_pool_xns;
    agg.decay_rate_per_day = config.decay_rate_per_day;
    return agg;
}

/// First-iteration experiment grid: slow decay over four pool sizes.
inline std::vector<ScenarioConfig> table1_preset(std::uint64_t master_seed = kDefaultMasterSeed) {
    std::vector<ScenarioConfig> configs;
    for (const double a0 : {250e6, 500e6, 750e6, 1000e6}) {
        ScenarioConfig cfg;
        cfg.label = "table1";
        cfg.initial_pool_xns = a0;
        cfg.decay_rate_per_day = 0.0005;
        cfg.timesteps = 3652;
        cfg.runs = 100;
        cfg.master_seed = master_seed;
        configs.push_back(std::move(cfg));
    }
    return configs;
}

/// Second-iteration grid: fast decay (two-year distribution) over six pool
/// sizes, including two smaller allocations.
inline std::vector<ScenarioConfig> table2_preset(std::uint64_t master_seed = kDefaultMasterSeed) {
    std::vector<ScenarioConfig> configs;
    for (const double a0 : {10e6, 50e6, 250e6, 500e6, 750e6, 1000e6}) {
        ScenarioConfig cfg;
        cfg.label = "table2";
        cfg.initial_pool_xns = a0;
        cfg.decay_rate_per_day = 0.01;
        cfg.timesteps = 3652;
        cfg.runs = 100;
        cfg.master_seed = master_seed;
        configs.push_back(std::move(cfg));
    }
    return configs;
}

struct SweepEntry {
    ScenarioConfig config;
    std::optional<AggregateResult> aggregate;
    std::string error;  // non-empty when this scenario failed
};

/// Runs every scenario and aggregates each one. A failing scenario is
/// reported in its entry without affecting the others.
inline std::vector<SweepEntry> run_sweep(std::span<const ScenarioConfig> configs,
                                         unsigned jobs = 0) {
    std::vector<SweepEntry> entries;
    entries.reserve(configs.size());
    for (const ScenarioConfig& config : configs) {
        SweepEntry entry{config, std::nullopt, {}};
        try {
            const std::vector<RunResult> results = run_scenario(config, jobs);
            entry.aggregate = aggregate_mean(config, results);
        } catch (const std::exception& ex) {
            entry.error = ex.what();
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace tokensim
